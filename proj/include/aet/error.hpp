#pragma once

#include <stdexcept>
#include <string>

namespace aet {

// Thrown when user-supplied configuration fails validation. The message names
// the offending field so CLI users can fix their config file.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace aet
