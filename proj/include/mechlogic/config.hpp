#pragma once

// key=value run configuration: template constants, references, calibrated
// frequency, integration and clock settings.

#include <iosfwd>
#include <optional>
#include <string>

#include "mechlogic/gate.hpp"

namespace mechlogic::config {

/// Clock in carrier periods, measured from the start of the enable pulse.
struct ClockSchedule {
    double pulse_periods = 2500;
    double sample_periods = 10000;  // ports are read and data is driven here
    double cycle_periods = 27500;
};

struct RunConfig {
    std::string template_name = "reconstructed";
    gate::NorTemplate<double> tmpl = gate::NorTemplate<double>::reconstructed();
    gate::LogicReference<double> ref;
    std::optional<double> omega;
    double dt_periods = 0.025;
    int window_periods = 50;
    ClockSchedule clock;
    std::string output_dir = ".";

    /// Throws if the frequency has not been calibrated.
    double require_omega() const;
    void validate() const;
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Unknown keys are errors; missing keys keep their defaults. `template`
/// selects the base constants before individual overrides apply.
RunConfig parse(std::istream &in);
void write(std::ostream &out, const RunConfig &c);
RunConfig load(const std::string &path);
void save(const std::string &path, const RunConfig &c);

}  // namespace mechlogic::config
