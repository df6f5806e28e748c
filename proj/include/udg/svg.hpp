#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "mdp.hpp"
#include "transport.hpp"

namespace udg {

namespace detail {

inline const char* palette(std::size_t i)
{
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

inline std::string fixed(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

struct Frame {
    Interval xb, yb;
    double size = 480.0, margin = 30.0;
    double px(double x) const { return margin + (x - xb.lo) / xb.width() * (size - 2 * margin); }
    double py(double y) const { return size - margin - (y - yb.lo) / yb.width() * (size - 2 * margin); }
};

inline void svg_open(std::ostream& os, const Frame& f, const std::string& title)
{
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.size << "\" height=\"" << f.size
       << "\" viewBox=\"0 0 " << f.size << ' ' << f.size << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<rect x=\"" << f.margin << "\" y=\"" << f.margin << "\" width=\"" << f.size - 2 * f.margin
       << "\" height=\"" << f.size - 2 * f.margin << "\" fill=\"none\" stroke=\"black\"/>\n"
       << "<text x=\"" << f.size / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
       << title << "</text>\n";
}

} // namespace detail

/// One polyline per episode in the (x, y) plane, colored by policy_id.
inline void write_trajectory_svg(std::ostream& os, const std::vector<Buffer>& buffers, const EnvSpec& spec,
                                 const std::string& title)
{
    const detail::Frame f{spec.state_bounds[0], spec.state_bounds[1]};
    detail::svg_open(os, f, title);
    for (const auto& buf : buffers)
        for (std::size_t e = 0; e < buf.episode_count(); ++e) {
            auto [lo, hi] = buf.episode_range(e);
            const auto color = detail::palette(static_cast<std::size_t>(buf.transitions[lo].policy_id));
            os << "<polyline fill=\"none\" stroke-opacity=\"0.6\" stroke=\"" << color << "\" points=\"";
            os << detail::fixed(f.px(buf.transitions[lo].s[0])) << ',' << detail::fixed(f.py(buf.transitions[lo].s[1]));
            for (std::size_t k = lo; k < hi; ++k)
                os << ' ' << detail::fixed(f.px(buf.transitions[k].s2[0])) << ','
                   << detail::fixed(f.py(buf.transitions[k].s2[1]));
            os << "\"/>\n";
        }
    os << "</svg>\n";
}

/// Scatter of 2-D measures; marker area proportional to weight.
inline void write_occupancy_svg(std::ostream& os, const std::vector<EmpiricalMeasure>& measures, const EnvSpec& spec,
                                const std::string& title)
{
    const detail::Frame f{spec.state_bounds[0], spec.state_bounds[1]};
    detail::svg_open(os, f, title);
    for (std::size_t m = 0; m < measures.size(); ++m) {
        const auto& mu = measures[m];
        require(mu.dim == 2, "write_occupancy_svg: measures must be 2-D");
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const double r = 1.0 + 40.0 * std::sqrt(mu.weights[i]);
            os << "<circle cx=\"" << detail::fixed(f.px(mu.point(i)[0])) << "\" cy=\""
               << detail::fixed(f.py(mu.point(i)[1])) << "\" r=\"" << detail::fixed(r) << "\" fill=\""
               << detail::palette(m) << "\" fill-opacity=\"0.3\"/>\n";
        }
    }
    os << "</svg>\n";
}

/// Tabular trajectory records: policy_id episode t x y.
inline void write_trajectory_table(std::ostream& os, const std::vector<Buffer>& buffers)
{
    os << "policy_id episode t x y\n";
    for (const auto& buf : buffers)
        for (std::size_t e = 0; e < buf.episode_count(); ++e) {
            auto [lo, hi] = buf.episode_range(e);
            for (std::size_t k = lo; k < hi; ++k) {
                const auto& tr = buf.transitions[k];
                os << tr.policy_id << ' ' << e << ' ' << tr.t << ' ' << format_double(tr.s[0]) << ' '
                   << format_double(tr.s[1]) << '\n';
            }
        }
}

} // namespace udg
