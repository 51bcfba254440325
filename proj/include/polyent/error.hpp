#pragma once

#include <stdexcept>
#include <string>

namespace polyent {

// Domain error carrying a machine-readable code such as "ZeroState" or "CutsFoundVertex".
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace polyent
