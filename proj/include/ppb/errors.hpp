#ifndef PPB_ERRORS_HPP
#define PPB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ppb {

// Bad configuration or bad operation input. CLI exit code 2.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// File-level failures: missing files, short reads, bad magic. CLI exit code 3.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: saturated rate correction, non-converged fit,
// curve without a peak. CLI exit code 4.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ppb

#endif
