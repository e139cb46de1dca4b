#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssr/model.hpp"
#include "ssr/report.hpp"
#include "ssr/scan.hpp"
#include "ssr/topology.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kNumerical = 3 };

int log_level() {
    const char* env = std::getenv("SSRSCREEN_LOG");
    if (!env) return 1;
    std::string v = env;
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "ssrscreen: " << msg << "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ssr::ParseError("cannot open file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ssr::ParseError("cannot write file '" + path.string() + "'");
    out << content;
}

std::string scenario_file_stem(const std::string& label, std::size_t index) {
    std::string stem = "scan_" + std::to_string(index + 1) + "_";
    for (char c : label) stem += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return stem + ".csv";
}

struct BandOverride {
    bool set = false;
    ssr::ScanBand band;
};

BandOverride parse_band(const std::string& spec) {
    BandOverride b;
    if (spec.empty()) return b;
    double start, end, step;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &start, &end, &step) != 3)
        throw ssr::ParseError("--band expects start:end:step");
    b.set = true;
    b.band = {start, end, step};
    return b;
}

int cmd_screen(const std::string& network_path, const std::string& request_path,
               const std::string& out_dir, int max_depth_override, int k_override) {
    ssr::NetworkModel model = ssr::load_network(network_path);
    ssr::ScreenRequest req = ssr::parse_screen_request(read_file(request_path));
    if (max_depth_override > 0) req.max_depth = max_depth_override;
    if (k_override >= 0) req.k = k_override;
    auto conditions = ssr::screen(model, req);
    write_file(fs::path(out_dir) / "conditions.json", ssr::serialize_conditions(conditions));
    info("screen: " + std::to_string(conditions.size()) + " radial conditions -> " +
         (fs::path(out_dir) / "conditions.json").string());
    return kOk;
}

int cmd_scan(const std::string& network_path, const std::string& request_path,
             const std::string& out_dir, const BandOverride& band) {
    ssr::NetworkModel model = ssr::load_network(network_path);
    ssr::ScanRequest req = ssr::parse_scan_request(read_file(request_path), model);
    if (band.set) req.band = band.band;
    auto outcomes = ssr::sensitivity_sweep(model, req.poi, req.farm, req.scenarios, req.band);
    write_file(fs::path(out_dir) / "scan_summary.csv", ssr::scan_summary_csv(outcomes));
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok()) continue;
        write_file(fs::path(out_dir) / scenario_file_stem(outcomes[i].result->scenario.label, i),
                   ssr::scan_csv(*outcomes[i].result));
    }
    info("scan: " + std::to_string(outcomes.size()) + " scenarios -> " +
         (fs::path(out_dir) / "scan_summary.csv").string());
    return kOk;
}

int cmd_compare(const std::string& network_path, const std::string& network_after_path,
                const std::string& request_path, const std::string& out_dir,
                const BandOverride& band, int max_depth_override, int k_override) {
    ssr::NetworkModel before = ssr::load_network(network_path);
    ssr::NetworkModel after = ssr::load_network(network_after_path);

    nlohmann::ordered_json jreq;
    try {
        jreq = nlohmann::ordered_json::parse(read_file(request_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ssr::ParseError(std::string("compare request syntax error: ") + e.what());
    }
    if (!jreq.contains("screening")) throw ssr::ModelError("compare request needs 'screening'");
    ssr::ScreenRequest sreq = ssr::parse_screen_request(jreq.at("screening").dump());
    if (max_depth_override > 0) sreq.max_depth = max_depth_override;
    if (k_override >= 0) sreq.k = k_override;

    std::string scan_doc;
    if (jreq.contains("scan")) {
        if (jreq.at("scan").is_string()) {
            fs::path p = jreq.at("scan").get<std::string>();
            if (p.is_relative()) p = fs::path(request_path).parent_path() / p;
            scan_doc = read_file(p.string());
        } else {
            scan_doc = jreq.at("scan").dump();
        }
    }

    auto cond_before = ssr::screen(before, sreq);
    auto cond_after = ssr::screen(after, sreq);
    write_file(fs::path(out_dir) / "conditions_before.json", ssr::serialize_conditions(cond_before));
    write_file(fs::path(out_dir) / "conditions_after.json", ssr::serialize_conditions(cond_after));

    std::vector<ssr::ScanOutcome> sweep_before, sweep_after;
    if (!scan_doc.empty()) {
        ssr::ScanRequest scan_req_before = ssr::parse_scan_request(scan_doc, before);
        ssr::ScanRequest scan_req_after = ssr::parse_scan_request(scan_doc, after);
        if (band.set) {
            scan_req_before.band = band.band;
            scan_req_after.band = band.band;
        }
        sweep_before = ssr::sensitivity_sweep(before, scan_req_before.poi, scan_req_before.farm,
                                              scan_req_before.scenarios, scan_req_before.band);
        sweep_after = ssr::sensitivity_sweep(after, scan_req_after.poi, scan_req_after.farm,
                                             scan_req_after.scenarios, scan_req_after.band);
        for (std::size_t i = 0; i < sweep_before.size(); ++i)
            if (sweep_before[i].ok())
                write_file(fs::path(out_dir) / ("before_" + scenario_file_stem(
                                                                sweep_before[i].result->scenario.label, i)),
                           ssr::scan_csv(*sweep_before[i].result));
        for (std::size_t i = 0; i < sweep_after.size(); ++i)
            if (sweep_after[i].ok())
                write_file(fs::path(out_dir) / ("after_" + scenario_file_stem(
                                                               sweep_after[i].result->scenario.label, i)),
                           ssr::scan_csv(*sweep_after[i].result));
    }

    ssr::ExpansionComparison cmp =
        ssr::build_comparison(cond_before, cond_after, sweep_before, sweep_after);
    write_file(fs::path(out_dir) / "report.txt", ssr::emit_report(cmp, "text"));
    write_file(fs::path(out_dir) / "contingencies.csv", ssr::emit_report(cmp, "contingencies-csv"));
    write_file(fs::path(out_dir) / "damping.csv", ssr::emit_report(cmp, "damping-csv"));
    info("compare: outage-count " + ssr::to_string(cmp.outage_verdict) + ", damping " +
         ssr::to_string(cmp.damping));
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sub-synchronous resonance screening toolkit"};
    app.require_subcommand(1);

    std::string network, network_after, request, out_dir = ".", band_spec;
    int max_depth = -1, k = -1;

    auto add_common = [&](CLI::App* sub, bool needs_after) {
        sub->add_option("--network", network, "network model file")->required();
        if (needs_after)
            sub->add_option("--network-after", network_after, "post-expansion network model file")
                ->required();
        sub->add_option("--request", request, "request file")->required();
        sub->add_option("--out", out_dir, "output directory (default .)");
        sub->add_option("--max-depth", max_depth, "override path depth bound");
        sub->add_option("--k", k, "override N-k outage bound");
        sub->add_option("--band", band_spec, "override scan band start:end:step");
    };

    CLI::App* screen_cmd = app.add_subcommand("screen", "enumerate radial conditions");
    add_common(screen_cmd, false);
    CLI::App* scan_cmd = app.add_subcommand("scan", "frequency scan and damping index");
    add_common(scan_cmd, false);
    CLI::App* compare_cmd = app.add_subcommand("compare", "before/after expansion comparison");
    add_common(compare_cmd, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        BandOverride band = parse_band(band_spec);
        if (screen_cmd->parsed()) return cmd_screen(network, request, out_dir, max_depth, k);
        if (scan_cmd->parsed()) return cmd_scan(network, request, out_dir, band);
        if (compare_cmd->parsed())
            return cmd_compare(network, network_after, request, out_dir, band, max_depth, k);
        return kUsage;
    } catch (const ssr::ParseError& e) {
        std::cerr << "ssrscreen: " << e.what() << "\n";
        return kInput;
    } catch (const ssr::ModelError& e) {
        std::cerr << "ssrscreen: " << e.what() << "\n";
        return kInput;
    } catch (const ssr::NumericalError& e) {
        std::cerr << "ssrscreen: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "ssrscreen: " << e.what() << "\n";
        return kNumerical;
    }
}
