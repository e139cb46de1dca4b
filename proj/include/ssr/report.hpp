#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssr/scan.hpp"
#include "ssr/topology.hpp"

namespace ssr {

enum class Verdict { Improves, Worsens, Mixed, Unchanged };
std::string to_string(Verdict v);

/// One matched radial condition. Conditions are keyed by (sink, collapsed
/// path bus-sequence, outage set collapsed to bus pairs); the key is stable
/// under adding parallel circuits. Entries present on one side only carry an
/// empty count on the other.
struct MatchedCondition {
    std::string sink;
    std::vector<std::string> path_buses;
    std::vector<std::string> outage_pairs;  // "A-B" strings, sorted
    std::optional<int> count_before;
    std::optional<int> count_after;
    std::string label_before;
    std::string label_after;
    std::vector<Outage> outages_before;
    std::vector<Outage> outages_after;
};

std::vector<MatchedCondition> match_conditions(const std::vector<RadialCondition>& before,
                                               const std::vector<RadialCondition>& after);

/// Improves iff every matched pair grew or held with at least one strict
/// increase; mirrored for worsens; unchanged when all equal.
Verdict outage_count_verdict(const std::vector<MatchedCondition>& matched);

struct DampingRow {
    std::string scenario;
    std::optional<double> fx_before;
    std::optional<double> r_before;
    std::optional<double> fx_after;
    std::optional<double> r_after;
};

/// Pairs sweep outcomes by scenario label; throws when the scenario sets
/// differ, listing the difference.
std::vector<DampingRow> build_damping_rows(const std::vector<ScanOutcome>& before,
                                           const std::vector<ScanOutcome>& after);

/// Worsens iff no scenario's damping index improved and at least one
/// negative-damping scenario strictly worsened; mirrored for improves.
/// Rows lacking a crossover on either side are excluded from the comparison.
Verdict damping_verdict(const std::vector<DampingRow>& rows);

struct ExpansionComparison {
    std::vector<MatchedCondition> matched;
    std::vector<DampingRow> damping_rows;
    Verdict outage_verdict = Verdict::Unchanged;
    Verdict damping = Verdict::Unchanged;
};

ExpansionComparison build_comparison(const std::vector<RadialCondition>& before,
                                     const std::vector<RadialCondition>& after,
                                     const std::vector<ScanOutcome>& scan_before,
                                     const std::vector<ScanOutcome>& scan_after);

/// format: "text" (sections [topology]/[damping]/[verdicts]),
/// "contingencies-csv", or "damping-csv". Throws for unknown formats.
std::string emit_report(const ExpansionComparison& comparison, const std::string& format);

/// Per-scenario summary with the Table III/IV column structure.
std::string scan_summary_csv(const std::vector<ScanOutcome>& outcomes);

/// Plot data: f, R_net, X_net, R_cum, X_cum at 9 significant digits.
std::string scan_csv(const ScanResult& result);

/// Round-trip parsers for the CSV emitters (numeric content identity).
struct DampingCsvRow {
    std::string side;
    std::string farm_scenario;
    std::string grid_scenario;
    std::optional<double> fx;
    std::optional<double> r;
    std::string observation;
};
std::vector<DampingCsvRow> parse_damping_csv(const std::string& text);

struct ContingencyCsvRow {
    std::string side;
    std::string label;
    std::string from;
    std::string to;
    std::string circuit;
    std::string comment;
};
std::vector<ContingencyCsvRow> parse_contingencies_csv(const std::string& text);

std::string format_g9(double v);
std::string observation_label(std::optional<double> r_cum);

} // namespace ssr
