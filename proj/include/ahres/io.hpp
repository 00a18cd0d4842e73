// Line-oriented output for the command line tool: JSON lines for trajectories
// and reports, CSV for kernel tables. All floating point numbers go through
// the same %.17g formatter, so a run with a fixed config and seed produces
// byte-identical files.

#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "ahres/flow.hpp"
#include "ahres/linalg.hpp"

namespace ahres {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::domain: return "domain";
        case errc::precondition: return "precondition";
        case errc::accuracy: return "accuracy";
        case errc::integrator: return "integrator";
        case errc::caustic: return "caustic";
        case errc::fit: return "fit";
    }
    return "unknown";
}

inline const char* terminal_name(Terminal t) {
    return t == Terminal::time_limit ? "time_limit" : "hit_boundary";
}

// one JSON object assembled field by field; values are written immediately,
// in insertion order, keys are plain identifiers and never need escaping
class JsonLine {
public:
    JsonLine() : s_("{") {}

    JsonLine& field(const char* k, double v) { return raw(k, g17(v)); }
    JsonLine& field(const char* k, int v) { return raw(k, std::to_string(v)); }
    JsonLine& field(const char* k, std::size_t v) { return raw(k, std::to_string(v)); }
    JsonLine& field(const char* k, bool v) { return raw(k, v ? "true" : "false"); }
    JsonLine& field(const char* k, const char* v) {
        return raw(k, "\"" + std::string(v) + "\"");
    }
    JsonLine& field(const char* k, const std::string& v) { return field(k, v.c_str()); }
    JsonLine& field(const char* k, const vecd& v) {
        std::string a = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) a += ",";
            a += g17(v[i]);
        }
        return raw(k, a + "]");
    }

    std::string str() const { return s_ + "}"; }

private:
    JsonLine& raw(const char* k, const std::string& v) {
        if (s_.size() > 1) s_ += ",";
        s_ += "\"";
        s_ += k;
        s_ += "\":";
        s_ += v;
        return *this;
    }
    std::string s_;
};

inline std::string csv_join(const std::vector<std::string>& fields) {
    std::string row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) row += ",";
        row += fields[i];
    }
    return row;
}

// trajectory dump: one summary object, then one object per accepted step
inline void write_trajectory(std::ostream& os, const Trajectory& tr) {
    JsonLine head;
    head.field("type", "trajectory")
        .field("n", tr.n)
        .field("terminal", terminal_name(tr.terminal))
        .field("t_end", tr.t_end)
        .field("energy_drift", tr.energy_drift)
        .field("samples", tr.samples.size());
    if (tr.fit.valid) {
        head.field("boundary_exponent_lambda", tr.fit.slope_lambda)
            .field("boundary_exponent_mu", tr.fit.slope_mu);
    }
    os << head.str() << "\n";
    for (const auto& s : tr.samples) {
        os << JsonLine()
                  .field("t", s.t)
                  .field("x", s.pt.x)
                  .field("y", s.pt.y)
                  .field("lambda", s.pt.lambda)
                  .field("mu", s.pt.mu)
                  .str()
           << "\n";
    }
}

inline void write_shifted_trajectory(std::ostream& os, const ShiftedTrajectory& tr) {
    os << JsonLine()
              .field("type", "shifted_trajectory")
              .field("n", tr.n)
              .field("terminal", terminal_name(tr.terminal))
              .field("t_end", tr.t_end)
              .field("energy_drift", tr.energy_drift)
              .field("xdot_end", tr.xdot_end)
              .field("samples", tr.samples.size())
              .str()
       << "\n";
    for (const auto& s : tr.samples) {
        os << JsonLine()
                  .field("t", s.t)
                  .field("x", s.pt.x)
                  .field("y", s.pt.y)
                  .field("xi", s.pt.xi)
                  .field("eta", s.pt.eta)
                  .str()
           << "\n";
    }
}

}  // namespace ahres
