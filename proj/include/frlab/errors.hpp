#pragma once

#include <stdexcept>
#include <string>

namespace frlab {

// Input fails a documented precondition (bad parameter, disconnected graph, ...).
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed external data (edge lists, config files, cache files).
struct format_error : std::runtime_error {
    explicit format_error(const std::string& what) : std::runtime_error(what) {}
};

// A configured budget or cap would be exceeded; the message names the bound.
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

// Mathematically undefined request (e.g. inverse root of a non-mean-zero function
// with projection disabled).
struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace frlab
