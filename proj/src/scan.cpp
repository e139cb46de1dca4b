#include "ssr/scan.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace ssr {

using ordered_json = nlohmann::ordered_json;
using cplx = std::complex<double>;

namespace {

constexpr double kSlipTolerance = 1e-9;
constexpr double kBisectionTolHz = 1e-3;

/// Farm admittance used for non-study wind farms inside Y (full dispatch,
/// all turbines): pu on system base.
cplx farm_admittance_pu(const WindFarmParams& p, double machine_mva, double system_mva,
                        double f_hz) {
    double w = f_hz / kFundamentalHz;
    double fr = p.rotor_frequency(1.0);
    double s = (f_hz - fr) / f_hz;
    if (std::abs(s) < kSlipTolerance) return {0.0, 0.0};
    cplx z_rotor(p.r_r / s, p.x_r * w);
    cplx z_mag(0.0, p.x_m * w);
    cplx z_t = cplx(p.r_s, p.x_s * w) + z_mag * z_rotor / (z_mag + z_rotor);
    // All turbines in parallel, then machine base -> system base.
    cplx z_farm_machine_base = z_t;  // turbine pu == farm pu on farm MVA base
    cplx z_sys = z_farm_machine_base * (system_mva / machine_mva);
    return 1.0 / z_sys;
}

} // namespace

int AdmittanceMatrix::index_of(const std::string& bus) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i] == bus) return static_cast<int>(i);
    return -1;
}

AdmittanceMatrix network_admittance(const NetworkModel& model, double f_hz,
                                    const std::string& study_bus) {
    if (f_hz <= 0.0) throw NumericalError("frequency must be > 0");
    const double w = f_hz / kFundamentalHz;

    AdmittanceMatrix m;
    for (const auto& b : model.buses) m.buses.push_back(b.id);
    std::size_t n = m.buses.size();
    m.y.assign(n, std::vector<cplx>(n, cplx(0.0, 0.0)));
    auto idx = [&](const std::string& id) { return static_cast<std::size_t>(m.index_of(id)); };

    for (const auto& br : model.branches) {
        if (!br.in_service()) continue;
        cplx z(br.r, br.x * w - br.xc / w);
        if (std::abs(z) < 1e-12)
            throw NumericalError("branch " + br.key().str() + " has zero series impedance at " +
                                 std::to_string(f_hz) + " Hz");
        cplx yser = 1.0 / z;
        cplx ychg(0.0, br.b_shunt / 2.0 * w);
        std::size_t i = idx(br.from), j = idx(br.to);
        m.y[i][i] += yser + ychg;
        m.y[j][j] += yser + ychg;
        m.y[i][j] -= yser;
        m.y[j][i] -= yser;
    }
    for (const auto& sh : model.shunts) {
        if (sh.status != Status::In) continue;
        m.y[idx(sh.bus)][idx(sh.bus)] += cplx(0.0, sh.b * w);
    }
    for (const auto& mc : model.machines) {
        if (mc.status != Status::In) continue;
        if (mc.bus == study_bus && mc.kind == MachineKind::WindFarm) continue;
        std::size_t i = idx(mc.bus);
        switch (mc.kind) {
            case MachineKind::InfiniteGrid:
                m.y[i][i] += cplx(kInfiniteGridAdmittance, 0.0);
                break;
            case MachineKind::Conventional: {
                double x_sys = mc.x_subtransient * model.system_mva_base / mc.mva_base;
                m.y[i][i] += 1.0 / cplx(0.0, x_sys * w);
                break;
            }
            case MachineKind::WindFarm:
                m.y[i][i] += farm_admittance_pu(*mc.wf_params, mc.mva_base,
                                                model.system_mva_base, f_hz);
                break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(m.y[i][i]) == 0.0)
            throw NumericalError("isolated bus '" + m.buses[i] + "' (singular row)");
    }
    return m;
}

namespace {

/// In-service connected component of the POI, as a submodel.
NetworkModel poi_component(const NetworkModel& model, const std::string& poi) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& br : model.branches) {
        if (!br.in_service()) continue;
        adj[br.from].push_back(br.to);
        adj[br.to].push_back(br.from);
    }
    std::set<std::string> comp{poi};
    std::vector<std::string> stack{poi};
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (const auto& v : adj[u])
            if (comp.insert(v).second) stack.push_back(v);
    }
    NetworkModel sub;
    sub.name = model.name;
    sub.system_mva_base = model.system_mva_base;
    for (const auto& b : model.buses)
        if (comp.count(b.id)) sub.buses.push_back(b);
    for (const auto& br : model.branches)
        if (br.in_service() && comp.count(br.from) && comp.count(br.to)) sub.branches.push_back(br);
    for (const auto& sh : model.shunts)
        if (sh.status == Status::In && comp.count(sh.bus)) sub.shunts.push_back(sh);
    for (const auto& mc : model.machines)
        if (mc.status == Status::In && comp.count(mc.bus)) sub.machines.push_back(mc);
    return sub;
}

bool has_grounding(const NetworkModel& sub, const std::string& study_bus) {
    for (const auto& br : sub.branches)
        if (br.b_shunt > 0.0) return true;
    for (const auto& sh : sub.shunts)
        if (sh.b != 0.0) return true;
    for (const auto& mc : sub.machines)
        if (!(mc.bus == study_bus && mc.kind == MachineKind::WindFarm)) return true;
    return false;
}

} // namespace

std::complex<double> driving_point_impedance(const NetworkModel& model, const std::string& poi,
                                             double f_hz) {
    if (!model.has_bus(poi)) throw ModelError("unknown POI bus '" + poi + "'");
    NetworkModel sub = poi_component(model, poi);
    if (!has_grounding(sub, poi)) {
        std::string island;
        for (const auto& b : sub.buses) island += (island.empty() ? "" : ", ") + b.id;
        throw NumericalError("floating island with no grounding admittance: {" + island + "}");
    }
    AdmittanceMatrix am = network_admittance(sub, f_hz, poi);
    const std::size_t n = am.buses.size();
    Eigen::MatrixXcd y(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) y(static_cast<long>(i), static_cast<long>(j)) = am.y[i][j];
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<long>(n));
    int pi = am.index_of(poi);
    e(pi) = cplx(1.0, 0.0);
    Eigen::VectorXcd v = y.partialPivLu().solve(e);
    cplx z_pu = v(pi);
    if (!std::isfinite(z_pu.real()) || !std::isfinite(z_pu.imag()))
        throw NumericalError("singular admittance matrix at " + std::to_string(f_hz) + " Hz");
    return z_pu * model.z_base_ohm(poi);
}

std::complex<double> rotor_branch_impedance(const WindFarmParams& params, double dispatch_fraction,
                                            double f_hz) {
    if (f_hz <= 0.0) throw NumericalError("frequency must be > 0");
    double fr = params.rotor_frequency(dispatch_fraction);
    double s = (f_hz - fr) / f_hz;
    if (std::abs(s) < kSlipTolerance)
        throw NumericalError("slip pole at " + std::to_string(f_hz) + " Hz");
    return {params.r_r / s, params.x_r * f_hz / kFundamentalHz};
}

std::complex<double> wind_farm_impedance(const StudyFarm& farm, const ScanScenario& scenario,
                                         double f_hz) {
    const auto& p = farm.params;
    if (scenario.turbines_in_service_fraction <= 0.0 || scenario.turbines_in_service_fraction > 1.0)
        throw ModelError("turbines_in_service_fraction must lie in (0,1]");
    if (scenario.dispatch_fraction < 0.0 || scenario.dispatch_fraction > 1.0)
        throw ModelError("dispatch_fraction must lie in [0,1]");
    const double w = f_hz / kFundamentalHz;
    cplx z_rotor = rotor_branch_impedance(p, scenario.dispatch_fraction, f_hz);
    cplx z_mag(0.0, p.x_m * w);
    cplx z_turbine = cplx(p.r_s, p.x_s * w) + z_mag * z_rotor / (z_mag + z_rotor);
    double turbine_mva = farm.mva_base / p.n_turbines_total;
    double z_base_turbine = farm.base_kv * farm.base_kv / turbine_mva;
    double turbines = p.n_turbines_total * scenario.turbines_in_service_fraction;
    return z_turbine * z_base_turbine / turbines;
}

NetworkModel apply_scenario(const NetworkModel& model, const ScanScenario& scenario) {
    NetworkModel m = scenario.contingency ? apply_contingency(model, *scenario.contingency) : model;
    if (scenario.shunt_mode == ShuntMode::Explicit) {
        for (const auto& id : scenario.shunt_list) {
            bool found = false;
            for (const auto& sh : m.shunts)
                if (sh.bus == id && sh.switchable) found = true;
            if (!found)
                throw ModelError("scenario '" + scenario.label + "': no switchable shunt at '" +
                                 id + "'");
        }
    }
    for (auto& sh : m.shunts) {
        if (!sh.switchable) continue;
        switch (scenario.shunt_mode) {
            case ShuntMode::None: sh.status = Status::Out; break;
            case ShuntMode::All: sh.status = Status::In; break;
            case ShuntMode::Explicit: {
                bool listed = std::find(scenario.shunt_list.begin(), scenario.shunt_list.end(),
                                        sh.bus) != scenario.shunt_list.end();
                sh.status = listed ? Status::In : Status::Out;
                break;
            }
        }
    }
    return m;
}

std::optional<Crossover> ScanResult::damping_index() const {
    for (const auto& c : crossovers)
        if (c.series) return c;
    return std::nullopt;
}

ScanResult frequency_scan(const NetworkModel& model, const std::string& poi,
                          const std::optional<StudyFarm>& farm, const ScanScenario& scenario,
                          const ScanBand& band, const FarmImpedanceFn& farm_override) {
    if (!(band.start > 0.0 && band.start < band.end && band.end < kFundamentalHz))
        throw ModelError("scan band must satisfy 0 < start < end < 60");
    if (band.step <= 0.0) throw ModelError("scan step must be > 0");

    NetworkModel m = apply_scenario(model, scenario);
    const double z_base = m.z_base_ohm(poi);
    (void)z_base;

    FarmImpedanceFn farm_fn;
    if (farm_override) {
        farm_fn = farm_override;
    } else if (farm) {
        farm_fn = [&](double f) { return wind_farm_impedance(*farm, scenario, f); };
    } else {
        farm_fn = [](double) { return cplx(0.0, 0.0); };
    }

    ScanResult out;
    out.scenario = scenario;

    auto cumulative = [&](double f) -> cplx {
        cplx z_net = driving_point_impedance(m, poi, f);
        return z_net + farm_fn(f);
    };

    const int steps = static_cast<int>(std::floor((band.end - band.start) / band.step + 1e-9));
    for (int i = 0; i <= steps; ++i) {
        double f = band.start + band.step * i;
        cplx z_net;
        cplx z_farm;
        try {
            z_net = driving_point_impedance(m, poi, f);
            z_farm = farm_fn(f);
        } catch (const NumericalError&) {
            out.skipped_frequencies.push_back(f);
            continue;
        }
        cplx z_cum = z_net + z_farm;
        out.samples.push_back({f, z_net.real(), z_net.imag(), z_cum.real(), z_cum.imag()});
    }

    for (std::size_t i = 1; i < out.samples.size(); ++i) {
        const auto& a = out.samples[i - 1];
        const auto& b = out.samples[i];
        bool series = a.x_cum < 0.0 && b.x_cum >= 0.0;
        bool parallel = a.x_cum > 0.0 && b.x_cum <= 0.0;
        if (!series && !parallel) continue;
        double lo = a.f, hi = b.f;
        double xlo = a.x_cum;
        bool failed = false;
        while (hi - lo > kBisectionTolHz) {
            double mid = (lo + hi) / 2.0;
            double xm;
            try {
                xm = cumulative(mid).imag();
            } catch (const NumericalError&) {
                failed = true;
                break;
            }
            if ((xm < 0.0) == (xlo < 0.0)) {
                lo = mid;
                xlo = xm;
            } else {
                hi = mid;
            }
        }
        if (failed) {
            out.skipped_frequencies.push_back((a.f + b.f) / 2.0);
            continue;
        }
        double fx = (lo + hi) / 2.0;
        cplx zx;
        try {
            zx = cumulative(fx);
        } catch (const NumericalError&) {
            out.skipped_frequencies.push_back(fx);
            continue;
        }
        // A sign flip across a pole converges to the pole, where |X| blows
        // up instead of shrinking; discard those brackets.
        double xmag = std::abs(zx.imag());
        if (xmag > std::abs(a.x_cum) && xmag > std::abs(b.x_cum)) continue;
        Crossover c;
        c.f_hz = fx;
        c.r_cum_ohm = zx.real();
        c.series = series;
        out.crossovers.push_back(c);
    }
    return out;
}

std::vector<ScanOutcome> sensitivity_sweep(const NetworkModel& model, const std::string& poi,
                                           const std::optional<StudyFarm>& farm,
                                           const std::vector<ScanScenario>& scenarios,
                                           const ScanBand& band) {
    if (scenarios.empty()) throw ModelError("sensitivity sweep needs at least one scenario");
    std::vector<ScanOutcome> out;
    for (const auto& sc : scenarios) {
        ScanOutcome oc;
        try {
            oc.result = frequency_scan(model, poi, farm, sc, band);
        } catch (const std::exception& e) {
            oc.error = e.what();
        }
        out.push_back(std::move(oc));
    }
    return out;
}

std::optional<StudyFarm> study_farm_of(const NetworkModel& model, const std::string& poi) {
    std::vector<const Machine*> farms;
    for (const auto* mc : model.machines_at(poi))
        if (mc->kind == MachineKind::WindFarm && mc->status == Status::In) farms.push_back(mc);
    if (farms.empty()) return std::nullopt;
    if (farms.size() > 1)
        throw ModelError("more than one wind-farm machine at POI '" + poi +
                         "'; exactly one study unit is allowed");
    StudyFarm f;
    f.params = *farms.front()->wf_params;
    f.mva_base = farms.front()->mva_base;
    f.base_kv = model.bus(poi).base_kv;
    return f;
}

ScanRequest parse_scan_request(const std::string& document, const NetworkModel& model) {
    ordered_json j;
    try {
        j = ordered_json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("scan request syntax error: ") + e.what());
    }
    ScanRequest r;
    if (!j.contains("poi")) throw ModelError("scan request needs poi");
    r.poi = j.at("poi").get<std::string>();
    if (j.contains("band")) {
        const auto& jb = j.at("band");
        r.band.start = jb.value("start", 5.0);
        r.band.end = jb.value("end", 59.0);
        r.band.step = jb.value("step", 0.1);
    }
    if (j.contains("wind_farm")) {
        const auto& jw = j.at("wind_farm");
        StudyFarm f;
        f.params.n_turbines_total = jw.at("n_turbines_total").get<int>();
        f.params.r_s = jw.at("r_s").get<double>();
        f.params.x_s = jw.at("x_s").get<double>();
        f.params.x_m = jw.at("x_m").get<double>();
        f.params.r_r = jw.at("r_r").get<double>();
        f.params.x_r = jw.at("x_r").get<double>();
        for (const auto& pt : jw.at("f_rotor_map"))
            f.params.f_rotor_map.push_back(
                {pt.at("dispatch").get<double>(), pt.at("f_rotor").get<double>()});
        f.mva_base = jw.value("mva_base", 0.0);
        if (f.mva_base <= 0.0) {
            auto model_farm = study_farm_of(model, r.poi);
            if (!model_farm)
                throw ModelError("scan request wind_farm needs mva_base (no study machine at POI)");
            f.mva_base = model_farm->mva_base;
        }
        f.base_kv = model.bus(r.poi).base_kv;
        r.farm = f;
    } else {
        r.farm = study_farm_of(model, r.poi);
    }
    for (const auto& js : j.value("scenarios", ordered_json::array())) {
        ScanScenario sc;
        sc.label = js.value("label", "");
        sc.turbines_in_service_fraction = js.value("turbines_in_service_fraction", 1.0);
        sc.dispatch_fraction = js.value("dispatch_fraction", 1.0);
        if (js.contains("shunt_status")) {
            const auto& sh = js.at("shunt_status");
            if (sh.is_string()) {
                std::string s = sh.get<std::string>();
                if (s == "none") sc.shunt_mode = ShuntMode::None;
                else if (s == "all") sc.shunt_mode = ShuntMode::All;
                else throw ModelError("shunt_status must be none, all, or a bus list");
            } else if (sh.is_array()) {
                sc.shunt_mode = ShuntMode::Explicit;
                for (const auto& id : sh) sc.shunt_list.push_back(id.get<std::string>());
            } else {
                throw ModelError("shunt_status must be none, all, or a bus list");
            }
        }
        if (js.contains("contingency")) {
            sc.contingency = parse_contingency(js.at("contingency").dump());
        }
        if (sc.turbines_in_service_fraction <= 0.0 || sc.turbines_in_service_fraction > 1.0)
            throw ModelError("scenario '" + sc.label + "': turbines fraction out of (0,1]");
        if (sc.dispatch_fraction < 0.0 || sc.dispatch_fraction > 1.0)
            throw ModelError("scenario '" + sc.label + "': dispatch fraction out of [0,1]");
        r.scenarios.push_back(std::move(sc));
    }
    if (r.scenarios.empty()) throw ModelError("scan request needs at least one scenario");
    return r;
}

} // namespace ssr
