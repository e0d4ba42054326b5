#ifndef PPSTAT_CORE_ERROR_HPP
#define PPSTAT_CORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ppstat {

/// A computation could not be carried out (non-convergence, ties, empty cores, ...).
class ComputeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates an equidistance requirement of the stable matching.
class TieError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

/// Malformed configuration or pattern document.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw std::invalid_argument(message);
    }
}

} // namespace detail

} // namespace ppstat

#endif // PPSTAT_CORE_ERROR_HPP
