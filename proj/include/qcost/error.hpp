#pragma once

#include <stdexcept>
#include <string>

namespace qcost {

/// Error type thrown by all validating operations. The message always names
/// the offending entity (operator id, component, file) when one exists.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qcost
