#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace bfo {

/// Minimal result type carrying either a value or an error.
/// Stands in for std::expected, which needs C++23.
template <class T, class E>
class Expected {
 public:
  Expected(T value) : data_(std::in_place_index<0>, std::move(value)) {}
  Expected(E error) : data_(std::in_place_index<1>, std::move(error)) {}

  bool ok() const { return data_.index() == 0; }
  explicit operator bool() const { return ok(); }

  T& value() {
    assert(ok());
    return std::get<0>(data_);
  }
  const T& value() const {
    assert(ok());
    return std::get<0>(data_);
  }
  E& error() {
    assert(!ok());
    return std::get<1>(data_);
  }
  const E& error() const {
    assert(!ok());
    return std::get<1>(data_);
  }

  T& operator*() { return value(); }
  const T& operator*() const { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, E> data_;
};

}  // namespace bfo
