#pragma once

#include <stdexcept>
#include <string>

namespace vecsim {

// Invalid or inconsistent configuration (bad lane index, non-positive
// bandwidth, unknown config key, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// The zero-forcing detector could not be formed because the Gram matrix of
// the channel is numerically singular.  Callers that own the fading state
// recover by redrawing the innovation for the current slot.
class SingularChannelError : public std::runtime_error {
public:
    explicit SingularChannelError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite network parameters or losses during training.
class TrainingDivergenceError : public std::runtime_error {
public:
    explicit TrainingDivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// An API was used outside its contract (stepping a finished episode,
// mismatched tensor shapes, ...).  Indicates a programming error.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

} // namespace vecsim
