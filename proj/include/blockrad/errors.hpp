#ifndef BLOCKRAD_ERRORS_HPP
#define BLOCKRAD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace blockrad {

// Invalid argument or parameter outside the documented domain.
class input_error : public std::invalid_argument {
public:
    explicit input_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Enumeration or covering budget exceeded.
class resource_error : public std::runtime_error {
public:
    explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Quadrature non-convergence, eigensolver failure, tolerance not reached.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace blockrad

#endif
