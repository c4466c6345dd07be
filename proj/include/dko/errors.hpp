#ifndef DKO_ERRORS_HPP
#define DKO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dko {

// All recoverable failures are reported through typed exceptions so callers
// (and the CLI) can attach context without string matching.

struct InvalidEdge : std::runtime_error {
    explicit InvalidEdge(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidAgentIndex : std::runtime_error {
    explicit InvalidAgentIndex(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidParameter : std::runtime_error {
    explicit InvalidParameter(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidWindow : std::runtime_error {
    explicit InvalidWindow(const std::string& what) : std::runtime_error(what) {}
};

struct SingularDynamics : std::runtime_error {
    SingularDynamics(int agent, long step)
        : std::runtime_error("singular dynamics block, agent " + std::to_string(agent) +
                             " at step " + std::to_string(step)),
          agent(agent), step(step) {}
    int agent;
    long step;
};

struct TopologyMismatch : std::runtime_error {
    explicit TopologyMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct NotSPD : std::runtime_error {
    explicit NotSPD(const std::string& what) : std::runtime_error(what) {}
};

struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

struct InconsistentLocalInfo : std::runtime_error {
    explicit InconsistentLocalInfo(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientData : std::runtime_error {
    explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

struct UnobservableScenario : std::runtime_error {
    explicit UnobservableScenario(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an internal precondition that user input cannot violate fails.
struct InternalInvariantViolation : std::logic_error {
    explicit InternalInvariantViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace dko

#endif  // DKO_ERRORS_HPP
