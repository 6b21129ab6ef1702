#pragma once

#include <stdexcept>
#include <string>

namespace coxflux {

// A computation could not reach its requested accuracy (truncation cap hit,
// series remainder too large, optimizer failed). Bad arguments use
// std::invalid_argument / std::domain_error instead.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace coxflux
