#pragma once

#include <stdexcept>
#include <string>

namespace crt {

// Raised when an argument violates an operation's precondition.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a ball B(v, r) already covers the whole tree, so its complement is empty.
class EmptyComplement : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidParameter(what);
}

}  // namespace detail
}  // namespace crt
