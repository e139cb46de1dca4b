#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ssr/model.hpp"

namespace ssr {

inline constexpr double kFundamentalHz = 60.0;
/// Infinite-grid buses enter Y as a shunt admittance of this magnitude (pu).
inline constexpr double kInfiniteGridAdmittance = 1e6;

enum class ShuntMode { None, All, Explicit };

struct ScanScenario {
    std::string label;
    double turbines_in_service_fraction = 1.0;  // (0,1]
    double dispatch_fraction = 1.0;             // [0,1]
    ShuntMode shunt_mode = ShuntMode::All;
    std::vector<std::string> shunt_list;  // Explicit mode: these in, others out
    std::optional<Contingency> contingency;
};

struct ScanBand {
    double start = 5.0;
    double end = 59.0;
    double step = 0.1;
};

/// Study-unit equivalent: per-turbine parameters plus the farm's bases.
struct StudyFarm {
    WindFarmParams params;
    double mva_base = 0.0;  // farm total MVA
    double base_kv = 0.0;   // POI voltage base
};

struct ScanSample {
    double f = 0.0;
    double r_net = 0.0;
    double x_net = 0.0;
    double r_cum = 0.0;
    double x_cum = 0.0;
};

struct Crossover {
    double f_hz = 0.0;
    double r_cum_ohm = 0.0;
    bool series = true;  // X crosses - to + (series resonance); else parallel
    bool undamped() const { return series && r_cum_ohm < 0.0; }
};

struct ScanResult {
    ScanScenario scenario;
    std::vector<ScanSample> samples;
    std::vector<Crossover> crossovers;
    std::vector<double> skipped_frequencies;  // slip poles etc.

    /// First series crossover, if any: the damping-index point.
    std::optional<Crossover> damping_index() const;
};

struct ScanOutcome {
    std::optional<ScanResult> result;
    std::string error;  // nonempty when the scenario failed
    bool ok() const { return error.empty(); }
};

struct ScanRequest {
    std::string poi;
    ScanBand band;
    std::optional<StudyFarm> farm;  // overrides the model's study machine
    std::vector<ScanScenario> scenarios;
};

/// Complex nodal admittance matrix over the model's buses at frequency f.
/// Branch series admittance 1/(r + jx f/f0 - jxc f0/f), half line charging
/// at each end, shunts jb f/f0, non-study machines 1/(jx'' f/f0) on system
/// base, infinite grids as a large finite shunt. Throws NumericalError for a
/// bus with no connection (singular row).
struct AdmittanceMatrix {
    std::vector<std::string> buses;
    std::vector<std::vector<std::complex<double>>> y;
    int index_of(const std::string& bus) const;
};
AdmittanceMatrix network_admittance(const NetworkModel& model, double f_hz,
                                    const std::string& study_bus = "");

/// Thevenin impedance looking into the network at the POI, in Ohms on the
/// POI voltage base. The study-unit machine (wind farm at the POI) is
/// excluded from Y. Only the POI's in-service connected component enters the
/// solve; a component without any grounding admittance is a floating island.
std::complex<double> driving_point_impedance(const NetworkModel& model, const std::string& poi,
                                             double f_hz);

/// Single-cage induction equivalent of the aggregated farm, in Ohms.
/// slip s = (f - f_rotor)/f; the rotor branch r_r/s is negative below the
/// rotor frequency (induction generator effect).
std::complex<double> wind_farm_impedance(const StudyFarm& farm, const ScanScenario& scenario,
                                         double f_hz);

/// Rotor-branch impedance r_r/s + jx_r f/f0 alone (pu on turbine base).
std::complex<double> rotor_branch_impedance(const WindFarmParams& params, double dispatch_fraction,
                                            double f_hz);

using FarmImpedanceFn = std::function<std::complex<double>(double f_hz)>;

/// Sweep the band under one scenario; detect crossovers where cumulative X
/// passes from negative to positive between adjacent samples, refine each by
/// bisection to 1e-3 Hz, classify undamped iff cumulative R < 0 there.
/// farm_override replaces the built-in farm model when provided (farm may be
/// empty for a network-only scan).
ScanResult frequency_scan(const NetworkModel& model, const std::string& poi,
                          const std::optional<StudyFarm>& farm, const ScanScenario& scenario,
                          const ScanBand& band, const FarmImpedanceFn& farm_override = nullptr);

/// One ScanResult per scenario, independent evaluations; per-scenario errors
/// are collected and the sweep continues.
std::vector<ScanOutcome> sensitivity_sweep(const NetworkModel& model, const std::string& poi,
                                           const std::optional<StudyFarm>& farm,
                                           const std::vector<ScanScenario>& scenarios,
                                           const ScanBand& band);

/// Model with the scenario's contingency and shunt statuses applied.
NetworkModel apply_scenario(const NetworkModel& model, const ScanScenario& scenario);

/// The model's wind-farm machine at the POI, when present.
std::optional<StudyFarm> study_farm_of(const NetworkModel& model, const std::string& poi);

ScanRequest parse_scan_request(const std::string& document, const NetworkModel& model);

} // namespace ssr
