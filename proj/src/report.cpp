#include "ssr/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace ssr {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Improves: return "improves";
        case Verdict::Worsens: return "worsens";
        case Verdict::Mixed: return "mixed";
        case Verdict::Unchanged: return "unchanged";
    }
    return "?";
}

std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string observation_label(std::optional<double> r_cum) {
    if (!r_cum) return "no crossover";
    return *r_cum < 0.0 ? "Undamped SSCI/IGE" : "Damped Oscillation";
}

namespace {

struct ConditionKey {
    std::string sink;
    std::string path;
    std::string pairs;
    bool operator<(const ConditionKey& o) const {
        return std::tie(sink, path, pairs) < std::tie(o.sink, o.path, o.pairs);
    }
};

std::vector<std::string> outage_bus_pairs(const Contingency& c) {
    std::set<std::string> pairs;
    for (const auto& o : c.outages) {
        auto e = o.from <= o.to ? std::make_pair(o.from, o.to) : std::make_pair(o.to, o.from);
        pairs.insert(e.first + "-" + e.second);
    }
    return {pairs.begin(), pairs.end()};
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

ConditionKey key_of(const RadialCondition& c) {
    return {c.sink, join(c.path.path.buses, "-"), join(outage_bus_pairs(c.contingency), ",")};
}

} // namespace

std::vector<MatchedCondition> match_conditions(const std::vector<RadialCondition>& before,
                                               const std::vector<RadialCondition>& after) {
    auto check_designation = [](const std::vector<RadialCondition>& v, std::string& sink,
                                BranchKey& line, bool& have) {
        for (const auto& c : v) {
            if (!have) {
                sink = c.sink;
                line = c.series_line;
                have = true;
            } else if (c.sink != sink || !(c.series_line == line)) {
                throw ModelError("matched condition lists come from different designations");
            }
        }
    };
    std::string sink;
    BranchKey line;
    bool have = false;
    check_designation(before, sink, line, have);
    check_designation(after, sink, line, have);

    std::map<ConditionKey, std::pair<std::vector<const RadialCondition*>,
                                     std::vector<const RadialCondition*>>> groups;
    for (const auto& c : before) groups[key_of(c)].first.push_back(&c);
    for (const auto& c : after) groups[key_of(c)].second.push_back(&c);

    auto by_count = [](const RadialCondition* a, const RadialCondition* b) {
        if (a->outage_count != b->outage_count) return a->outage_count < b->outage_count;
        return a->contingency.outages < b->contingency.outages;
    };

    std::vector<MatchedCondition> out;
    for (auto& [key, sides] : groups) {
        auto& b = sides.first;
        auto& a = sides.second;
        std::sort(b.begin(), b.end(), by_count);
        std::sort(a.begin(), a.end(), by_count);
        std::size_t n = std::max(b.size(), a.size());
        for (std::size_t i = 0; i < n; ++i) {
            MatchedCondition mc;
            mc.sink = key.sink;
            const RadialCondition* any = i < b.size() ? b[i] : a[i];
            mc.path_buses = any->path.path.buses;
            mc.outage_pairs = outage_bus_pairs(any->contingency);
            if (i < b.size()) {
                mc.count_before = b[i]->outage_count;
                mc.label_before = b[i]->contingency.label;
                mc.outages_before = b[i]->contingency.outages;
            }
            if (i < a.size()) {
                mc.count_after = a[i]->outage_count;
                mc.label_after = a[i]->contingency.label;
                mc.outages_after = a[i]->contingency.outages;
            }
            out.push_back(std::move(mc));
        }
    }
    return out;
}

Verdict outage_count_verdict(const std::vector<MatchedCondition>& matched) {
    if (matched.empty()) throw ModelError("outage_count_verdict: empty matched list");
    bool all_ge = true, all_le = true, any_gt = false, any_lt = false, any_pair = false;
    for (const auto& m : matched) {
        if (!m.count_before || !m.count_after) continue;
        any_pair = true;
        int b = *m.count_before, a = *m.count_after;
        if (a < b) { all_ge = false; any_lt = true; }
        if (a > b) { all_le = false; any_gt = true; }
    }
    if (!any_pair) return Verdict::Unchanged;
    if (all_ge && any_gt) return Verdict::Improves;
    if (all_le && any_lt) return Verdict::Worsens;
    if (!any_gt && !any_lt) return Verdict::Unchanged;
    return Verdict::Mixed;
}

std::vector<DampingRow> build_damping_rows(const std::vector<ScanOutcome>& before,
                                           const std::vector<ScanOutcome>& after) {
    auto labels = [](const std::vector<ScanOutcome>& v) {
        std::vector<std::string> out;
        for (const auto& oc : v)
            if (oc.ok()) out.push_back(oc.result->scenario.label);
        return out;
    };
    auto lb = labels(before), la = labels(after);
    std::set<std::string> sb(lb.begin(), lb.end()), sa(la.begin(), la.end());
    if (sb != sa) {
        std::string diff;
        for (const auto& s : sb)
            if (!sa.count(s)) diff += " -" + s;
        for (const auto& s : sa)
            if (!sb.count(s)) diff += " +" + s;
        throw ModelError("scenario sets differ between the two sweeps:" + diff);
    }
    std::vector<DampingRow> rows;
    for (const auto& oc : before) {
        if (!oc.ok()) continue;
        DampingRow row;
        row.scenario = oc.result->scenario.label;
        if (auto c = oc.result->damping_index()) {
            row.fx_before = c->f_hz;
            row.r_before = c->r_cum_ohm;
        }
        for (const auto& oa : after) {
            if (!oa.ok() || oa.result->scenario.label != row.scenario) continue;
            if (auto c = oa.result->damping_index()) {
                row.fx_after = c->f_hz;
                row.r_after = c->r_cum_ohm;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Verdict damping_verdict(const std::vector<DampingRow>& rows) {
    bool all_le = true, all_ge = true, any_lt_neg = false, any_gt_neg = false;
    bool any_lt = false, any_gt = false, any_pair = false;
    for (const auto& row : rows) {
        if (!row.r_before || !row.r_after) continue;
        any_pair = true;
        double b = *row.r_before, a = *row.r_after;
        if (a > b) { all_le = false; any_gt = true; if (a < 0 || b < 0) any_gt_neg = true; }
        if (a < b) { all_ge = false; any_lt = true; if (a < 0 || b < 0) any_lt_neg = true; }
    }
    if (!any_pair) return Verdict::Unchanged;
    if (!any_lt && !any_gt) return Verdict::Unchanged;
    if (all_le && any_lt_neg) return Verdict::Worsens;
    if (all_ge && any_gt_neg) return Verdict::Improves;
    return Verdict::Mixed;
}

ExpansionComparison build_comparison(const std::vector<RadialCondition>& before,
                                     const std::vector<RadialCondition>& after,
                                     const std::vector<ScanOutcome>& scan_before,
                                     const std::vector<ScanOutcome>& scan_after) {
    ExpansionComparison cmp;
    cmp.matched = match_conditions(before, after);
    cmp.damping_rows = build_damping_rows(scan_before, scan_after);
    cmp.outage_verdict = cmp.matched.empty() ? Verdict::Unchanged : outage_count_verdict(cmp.matched);
    cmp.damping = damping_verdict(cmp.damping_rows);
    return cmp;
}

namespace {

std::pair<std::string, std::string> split_scenario(const std::string& label) {
    auto pos = label.find(" / ");
    if (pos == std::string::npos) return {label, ""};
    return {label.substr(0, pos), label.substr(pos + 3)};
}

std::string opt_num(const std::optional<double>& v) {
    return v ? format_g9(*v) : "";
}

std::string opt_count(const std::optional<int>& v) {
    return v ? std::to_string(*v) : "-";
}

void emit_condition_rows(std::ostringstream& os, const std::string& side,
                         const std::string& label, const std::vector<Outage>& outages,
                         const std::string& sink, const std::vector<std::string>& path) {
    bool first = true;
    for (const auto& o : outages) {
        os << side << "," << (first ? label : "") << "," << o.from << "," << o.to << ","
           << o.circuit << ",";
        if (first) os << "Radial path from " << path.front() << " to " << sink;
        os << "\n";
        first = false;
    }
}

} // namespace

std::string emit_report(const ExpansionComparison& cmp, const std::string& format) {
    if (format == "text") {
        std::ostringstream os;
        os << "[topology]\n";
        for (const auto& m : cmp.matched) {
            os << "condition sink=" << m.sink << " path=" << join(m.path_buses, "-")
               << " pairs=" << join(m.outage_pairs, ",") << " before=" << opt_count(m.count_before)
               << " after=" << opt_count(m.count_after) << "\n";
        }
        os << "\n[damping]\n";
        for (const auto& row : cmp.damping_rows) {
            os << "scenario=" << row.scenario << " fx_before=" << opt_num(row.fx_before)
               << " r_before=" << opt_num(row.r_before) << " fx_after=" << opt_num(row.fx_after)
               << " r_after=" << opt_num(row.r_after) << " observation_before="
               << observation_label(row.r_before) << " observation_after="
               << observation_label(row.r_after) << "\n";
        }
        os << "\n[verdicts]\n";
        os << "outage-count: " << to_string(cmp.outage_verdict) << "\n";
        os << "damping: " << to_string(cmp.damping) << "\n";
        return os.str();
    }
    if (format == "contingencies-csv") {
        std::ostringstream os;
        os << "Side,Contingency #,From Bus Number,To Bus Number,Ckt ID,Comments\n";
        for (const auto& m : cmp.matched) {
            if (m.count_before)
                emit_condition_rows(os, "before", m.label_before, m.outages_before, m.sink,
                                    m.path_buses);
            if (m.count_after)
                emit_condition_rows(os, "after", m.label_after, m.outages_after, m.sink,
                                    m.path_buses);
        }
        return os.str();
    }
    if (format == "damping-csv") {
        std::ostringstream os;
        os << "Side,Wind Farm Operation Scenario,Transmission Side Scenario,"
              "Cross-over Frequency X (Hz),Cumulative R (Ohm),Observation\n";
        for (const auto& row : cmp.damping_rows) {
            auto [farm, grid] = split_scenario(row.scenario);
            os << "before," << farm << "," << grid << "," << opt_num(row.fx_before) << ","
               << opt_num(row.r_before) << "," << observation_label(row.r_before) << "\n";
        }
        for (const auto& row : cmp.damping_rows) {
            auto [farm, grid] = split_scenario(row.scenario);
            os << "after," << farm << "," << grid << "," << opt_num(row.fx_after) << ","
               << opt_num(row.r_after) << "," << observation_label(row.r_after) << "\n";
        }
        return os.str();
    }
    throw ModelError("unknown report format '" + format + "'");
}

std::string scan_summary_csv(const std::vector<ScanOutcome>& outcomes) {
    std::ostringstream os;
    os << "Wind Farm Operation Scenario,Transmission Side Scenario,"
          "Cross-over Frequency X (Hz),Cumulative R (Ohm),Observation\n";
    for (const auto& oc : outcomes) {
        if (!oc.ok()) {
            os << "error,,,," << oc.error << "\n";
            continue;
        }
        auto [farm, grid] = split_scenario(oc.result->scenario.label);
        auto c = oc.result->damping_index();
        std::optional<double> fx, r;
        if (c) {
            fx = c->f_hz;
            r = c->r_cum_ohm;
        }
        os << farm << "," << grid << "," << opt_num(fx) << "," << opt_num(r) << ","
           << observation_label(r) << "\n";
    }
    return os.str();
}

std::string scan_csv(const ScanResult& result) {
    std::ostringstream os;
    os << "f_hz,r_network_ohm,x_network_ohm,r_cumulative_ohm,x_cumulative_ohm\n";
    for (const auto& s : result.samples) {
        os << format_g9(s.f) << "," << format_g9(s.r_net) << "," << format_g9(s.x_net) << ","
           << format_g9(s.r_cum) << "," << format_g9(s.x_cum) << "\n";
    }
    return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::vector<DampingCsvRow> parse_damping_csv(const std::string& text) {
    std::vector<DampingCsvRow> out;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() < 6) throw ParseError("damping csv row with missing fields: " + line);
        DampingCsvRow row;
        row.side = f[0];
        row.farm_scenario = f[1];
        row.grid_scenario = f[2];
        if (!f[3].empty()) row.fx = std::stod(f[3]);
        if (!f[4].empty()) row.r = std::stod(f[4]);
        row.observation = f[5];
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<ContingencyCsvRow> parse_contingencies_csv(const std::string& text) {
    std::vector<ContingencyCsvRow> out;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() < 6) throw ParseError("contingencies csv row with missing fields: " + line);
        out.push_back({f[0], f[1], f[2], f[3], f[4], f[5]});
    }
    return out;
}

} // namespace ssr
