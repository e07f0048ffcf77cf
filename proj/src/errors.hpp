#pragma once
#include <stdexcept>
#include <string>

namespace qnet {

// Error taxonomy shared by the library and mapped onto C-API status codes.
struct CutoffError : std::runtime_error {
    double achieved_mass;  // mass actually captured when the cutoff was rejected
    explicit CutoffError(const std::string& msg, double mass = 0.0)
        : std::runtime_error(msg), achieved_mass(mass) {}
};

struct SingularError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooLargeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qnet
