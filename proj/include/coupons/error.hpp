#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace coupons {

// Bad input values (negative money, malformed config, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Well-formed input outside an operation's domain (group not in set, missing
// table entry, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An enumeration or support exceeded its configured cap.
class CapacityError : public std::length_error {
 public:
  CapacityError(const std::string& what, std::uint64_t size)
      : std::length_error(what), size_(size) {}

  // Exact size that was requested (saturated at UINT64_MAX).
  std::uint64_t size() const noexcept { return size_; }

 private:
  std::uint64_t size_;
};

// Non-finite intermediate value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw logs that contradict each other (e.g. a coupon redeemed after expiry).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coupons
