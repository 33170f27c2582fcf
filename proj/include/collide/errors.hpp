#pragma once

#include <stdexcept>
#include <string>

namespace collide {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HorizonTooLarge : Error {
  using Error::Error;
};

struct WrongEnsembleSize : Error {
  using Error::Error;
};

struct InvalidPath : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct QuadratureFailure : Error {
  using Error::Error;
};

struct ComplexityGuard : Error {
  using Error::Error;
};

struct TruncationOrderError : Error {
  using Error::Error;
};

struct NegativityError : Error {
  using Error::Error;
};

struct ResolutionError : Error {
  using Error::Error;
};

struct NonFiniteSample : Error {
  using Error::Error;
};

struct ContractError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(std::string field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace collide
