#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopmart/exact.hpp"
#include "stopmart/montecarlo.hpp"
#include "stopmart/verify.hpp"

namespace stopmart {

using json = nlohmann::json;

// Exact trace CSV: n, p_gt_n, L_n, R_n, m2_alive, m<p>_alive..., err_budget.
inline void write_trace_csv(const ExactTrace<double>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "n,p_gt_n,L_n,R_n,m2_alive";
    for (double p : trace.p_list) out << ",m" << p << "_alive";
    out << ",err_budget\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.p_gt_n.size(); ++i) {
        out << (i + 1) << ',' << trace.p_gt_n[i] << ',' << trace.stopped_cum[i] << ','
            << trace.alive_first[i] << ',' << trace.m2_alive[i];
        for (const auto& col : trace.mp_alive) out << ',' << col[i];
        out << ',' << trace.budget_abs << '\n';
    }
}

inline json trace_summary_json(const ExactTrace<double>& trace) {
    json j;
    j["horizon"] = trace.horizon;
    j["p_gt_N"] = trace.p_gt_n.back();
    j["L_N"] = trace.stopped_cum.back();
    j["R_N"] = trace.alive_first.back();
    j["m2_alive_N"] = trace.m2_alive.back();
    j["stopped_mass"] = to_double(trace.total_stop_mass_);
    j["budget_mass"] = trace.budget_mass;
    j["budget_abs"] = trace.budget_abs;
    json hist = json::object();
    for (const auto& [k, v] : trace.overshoot_hist) hist[std::to_string(k)] = v;
    j["overshoot_hist"] = hist;
    json stopped = json::object();
    for (const auto& [k, v] : trace.stopped_hist) stopped[std::to_string(k)] = v;
    j["stopped_hist"] = stopped;
    return j;
}

inline json estimate_json(const Estimate& e) {
    return json{{"value", e.value}, {"half_width_95", e.half_width}};
}

inline json mc_report_json(const McReport& report) {
    json j;
    j["paths"] = report.total_paths;
    j["seed"] = report.options.seed;
    j["partitions"] = report.options.partitions;
    j["n_max"] = report.options.n_max;
    j["censored_fraction"] = report.censored_fraction();
    j["max_abs_m"] = report.max_abs_m;
    if (report.overshoot_count > 0) {
        j["overshoot_mean"] = estimate_json(report.overshoot_mean());
        j["overshoot_count"] = report.overshoot_count;
    }
    json rows = json::array();
    for (const auto& s : report.stats()) {
        json row;
        row["n"] = s.n;
        row["p_gt_n"] = estimate_json(s.p_gt_n);
        row["L_n"] = estimate_json(s.stopped_cum);
        row["R_n"] = estimate_json(s.alive_first);
        row["m2_alive"] = estimate_json(s.m2_alive);
        rows.push_back(row);
    }
    j["checkpoints"] = rows;
    // Theorem 3.1 reading of the horizon cutoff: the bias of L_hat at N_max
    // is -R_{N_max}, carried by the still-alive paths.
    j["truncation_bias_identity"] = "bias(L_hat at N_max) = -R_{N_max}";
    return j;
}

inline void write_mc_checkpoint_csv(const McReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "n,p_gt_n,se_p,L_n,se_L,R_n,se_R,m2_alive,se_m2\n";
    out.precision(17);
    for (const auto& s : report.stats()) {
        out << s.n << ',' << s.p_gt_n.value << ',' << s.p_gt_n.half_width / 1.96 << ','
            << s.stopped_cum.value << ',' << s.stopped_cum.half_width / 1.96 << ','
            << s.alive_first.value << ',' << s.alive_first.half_width / 1.96 << ','
            << s.m2_alive.value << ',' << s.m2_alive.half_width / 1.96 << '\n';
    }
}

inline json check_result_json(const CheckResult& result) {
    json j;
    j["name"] = result.check_name;
    j["status"] = to_string(result.status);
    j["tolerance"] = result.tolerance;
    j["observed"] = result.observed;
    j["inputs_digest"] = result.inputs_digest;
    if (!result.note.empty()) j["note"] = result.note;
    return j;
}

inline void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(2) << '\n';
}

// Minimal static SVG line plot; x is log-scaled when spanning decades.
inline void write_svg_plot(const std::string& path, const std::string& title,
                           const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("bad plot series");
    const double width = 640, height = 400, margin = 50;
    double xmin = xs.front(), xmax = xs.back();
    bool log_x = xmax / std::max(1.0, xmin) > 100;
    auto tx = [&](double x) {
        double a = log_x ? std::log10(std::max(x, 1e-300)) : x;
        double lo = log_x ? std::log10(std::max(xmin, 1e-300)) : xmin;
        double hi = log_x ? std::log10(xmax) : xmax;
        return margin + (a - lo) / std::max(1e-300, hi - lo) * (width - 2 * margin);
    };
    double ymin = ys[0], ymax = ys[0];
    for (double y : ys) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (ymax == ymin) ymax = ymin + 1;
    auto ty = [&](double y) {
        return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
    };
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
        << height << "'>\n<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='14'>"
        << title << "</text>\n<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < xs.size(); ++i)
        out << tx(xs[i]) << ',' << ty(ys[i]) << ' ';
    out << "'/>\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", ymin);
    out << "<text x='5' y='" << ty(ymin) << "' font-size='11'>" << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.6g", ymax);
    out << "<text x='5' y='" << ty(ymax) + 10 << "' font-size='11'>" << buf << "</text>\n";
    out << "</svg>\n";
}

}  // namespace stopmart
