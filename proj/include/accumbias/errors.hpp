#pragma once

#include <stdexcept>
#include <string>

namespace accumbias {

// Empty inputs, out-of-range parameters, malformed sequences.
class invalid_input_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Inputs that are well-formed but break a modelling assumption (e.g. unequal sigma_d).
class model_violation_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A policy under which the requested conditional quantity does not exist.
class degenerate_policy_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A rate whose denominator is zero.
class undefined_rate_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class resource_error : public std::length_error {
public:
    using std::length_error::length_error;
};

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failures; the message carries the path.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace accumbias
