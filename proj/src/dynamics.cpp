#include "mechlogic/dynamics.hpp"

#include <iomanip>
#include <ostream>

namespace mechlogic::dyn {

void write_traces_csv(std::ostream &out, const std::vector<Trace<double>> &traces, double omega) {
    if (traces.empty()) throw DynamicsError("no traces to write");
    const auto &first = traces.front();
    for (const auto &t : traces) {
        if (t.samples.size() != first.samples.size() || t.sample_period != first.sample_period ||
            t.start_time != first.start_time) {
            throw DynamicsError("traces must share one sampling grid");
        }
    }
    const double period = 2 * std::numbers::pi / omega;
    out << "time";
    for (const auto &t : traces) out << ',' << (t.label.empty() ? "u" + std::to_string(t.index) : t.label);
    out << '\n' << std::setprecision(9);
    for (std::size_t i = 0; i < first.samples.size(); ++i) {
        out << (first.start_time + static_cast<double>(i) * first.sample_period) / period;
        for (const auto &t : traces) out << ',' << t.samples[i];
        out << '\n';
    }
}

}  // namespace mechlogic::dyn
