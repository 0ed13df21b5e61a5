#include "cfmimo/cli.hpp"

#include "cfmimo/config.hpp"
#include "cfmimo/engine.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace cfmimo {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::int64_t seed = -1;
    int jobs = -1;
    bool cache = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts)
{
    cmd->add_option("--config", opts.config_path, "Scenario config JSON file");
    cmd->add_option("--preset", opts.preset, "Built-in base config (desk or paper)");
    cmd->add_option("--out", opts.out_dir, "Output directory override");
    cmd->add_option("--seed", opts.seed, "Seed override");
    cmd->add_option("--jobs", opts.jobs, "Worker count override (0 = auto)");
    cmd->add_flag("--cache", opts.cache, "Reuse results whose config hash matches");
}

ScenarioConfig assemble_config(const CommonOpts& opts,
                               const std::vector<std::pair<std::string, std::string>>& env)
{
    json doc = json::object();
    if (!opts.preset.empty()) {
        doc = preset_json(opts.preset);
    }
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        if (!in) {
            throw std::invalid_argument("config error: cannot open config file: " +
                                        opts.config_path);
        }
        json file_doc;
        try {
            in >> file_doc;
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(std::string("config error: invalid JSON: ") + e.what());
        }
        doc = deep_merge(doc, file_doc);
    }
    if (doc.empty()) {
        throw std::invalid_argument("config error: provide --config and/or --preset");
    }
    doc = apply_env_overrides(doc, env);
    ScenarioConfig config = parse_config(doc);
    if (!opts.out_dir.empty()) {
        config.output_dir = opts.out_dir;
    }
    if (opts.seed >= 0) {
        config.seed = static_cast<std::uint64_t>(opts.seed);
    }
    if (opts.jobs >= 0) {
        config.jobs = opts.jobs;
    }
    if (opts.cache) {
        config.cache = true;
    }
    return config;
}

void print_summary_rows(const std::vector<SummaryRow>& rows)
{
    std::cout << "scenario_id | algorithm | normalization | eirp_dbw_mhz | n_node | channel | "
                 "avg_se_bps_hz | outage_pct | avg_capacity_mbps\n";
    for (const auto& r : rows) {
        std::cout << r.scenario_id << " | " << r.algorithm << " | " << r.normalization << " | "
                  << r.eirp_dbw_per_mhz << " | " << r.n_node << " | " << r.channel_mode << " | "
                  << r.avg_se_bps_hz << " | " << r.outage_pct << " | " << r.avg_capacity_mbps
                  << "\n";
    }
}

// --- report helpers ---------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name, const std::string& file) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return static_cast<int>(i);
            }
        }
        throw std::runtime_error("file " + file + " missing column " + name);
    }
};

CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (first) {
            table.header = fields;
            first = false;
        } else {
            table.rows.push_back(fields);
        }
    }
    return table;
}

int cmd_report(const std::string& results_dir, const std::string& out_dir)
{
    std::vector<std::string> summaries;
    std::vector<std::string> user_files;
    if (!fs::exists(results_dir)) {
        std::cerr << "error: results directory does not exist: " << results_dir << "\n";
        return kExitRuntime;
    }
    for (const auto& entry : fs::recursive_directory_iterator(results_dir)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const std::string name = entry.path().filename().string();
        if (name == "summary.csv" || name == "sweep_summary.csv") {
            summaries.push_back(entry.path().string());
        } else if (name == "user_records.csv") {
            user_files.push_back(entry.path().string());
        }
    }
    std::sort(summaries.begin(), summaries.end());
    std::sort(user_files.begin(), user_files.end());
    if (summaries.empty()) {
        std::cerr << "error: no summary CSVs under " << results_dir << "\n";
        return kExitRuntime;
    }

    fs::create_directories(out_dir);

    // Aggregate figure data: one long-format file per figure family.
    const std::vector<std::string> keys = {"algorithm",     "normalization", "eirp_dbw_mhz",
                                           "n_node",        "channel_mode",  "terminal"};
    struct Fig {
        const char* file;
        const char* value_column;
    };
    const std::vector<Fig> figs = {{"fig_se_vs_eirp.csv", "avg_se_bps_hz"},
                                   {"fig_outage_vs_eirp.csv", "outage_pct"},
                                   {"fig_capacity_vs_eirp.csv", "avg_capacity_mbps"}};
    for (const auto& fig : figs) {
        std::ofstream out(out_dir + "/" + fig.file, std::ios::binary);
        out << "scenario_id";
        for (const auto& k : keys) {
            out << ',' << k;
        }
        out << ',' << fig.value_column << '\n';
        for (const auto& path : summaries) {
            const CsvTable table = read_csv(path);
            const int sid = table.column("scenario_id", path);
            const int value = table.column(fig.value_column, path);
            std::vector<int> key_cols;
            key_cols.reserve(keys.size());
            for (const auto& k : keys) {
                key_cols.push_back(table.column(k, path));
            }
            for (const auto& row : table.rows) {
                out << row[static_cast<std::size_t>(sid)];
                for (int c : key_cols) {
                    out << ',' << row[static_cast<std::size_t>(c)];
                }
                out << ',' << row[static_cast<std::size_t>(value)] << '\n';
            }
        }
    }

    // Geographic SINR scatter and per-user allocated power, first drop only
    // (one row per user).
    {
        std::ofstream map_out(out_dir + "/fig_sinr_map.csv", std::ios::binary);
        std::ofstream pow_out(out_dir + "/fig_user_power.csv", std::ios::binary);
        map_out << "scenario_id,user_id,lat_deg,lon_deg,sinr_db\n";
        pow_out << "scenario_id,user_id,alloc_power_w,served\n";
        for (const auto& path : user_files) {
            const CsvTable table = read_csv(path);
            const int sid = table.column("scenario_id", path);
            const int drop = table.column("drop", path);
            const int user = table.column("user_id", path);
            const int lat = table.column("lat_deg", path);
            const int lon = table.column("lon_deg", path);
            const int sinr = table.column("sinr_db", path);
            const int power = table.column("alloc_power_w", path);
            const int served = table.column("served", path);
            for (const auto& row : table.rows) {
                if (row[static_cast<std::size_t>(drop)] != "0") {
                    continue;
                }
                map_out << row[static_cast<std::size_t>(sid)] << ','
                        << row[static_cast<std::size_t>(user)] << ','
                        << row[static_cast<std::size_t>(lat)] << ','
                        << row[static_cast<std::size_t>(lon)] << ','
                        << row[static_cast<std::size_t>(sinr)] << '\n';
                pow_out << row[static_cast<std::size_t>(sid)] << ','
                        << row[static_cast<std::size_t>(user)] << ','
                        << row[static_cast<std::size_t>(power)] << ','
                        << row[static_cast<std::size_t>(served)] << '\n';
            }
        }
    }
    std::cout << "report written to " << out_dir << "\n";
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args,
            const std::vector<std::pair<std::string, std::string>>& env)
{
    CLI::App app{"System-level simulator for centralised and federated cell-free MIMO over "
                 "NGSO swarms"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* validate_cmd = app.add_subcommand("validate", "Check a config and exit");
    add_common(validate_cmd, opts);

    auto* run_cmd = app.add_subcommand("run", "Run one scenario");
    add_common(run_cmd, opts);

    auto* sweep_cmd = app.add_subcommand("sweep", "Run the config's sweep grid");
    add_common(sweep_cmd, opts);

    std::string results_dir;
    std::string report_out = "report";
    auto* report_cmd = app.add_subcommand("report", "Emit plot-ready files from results");
    report_cmd->add_option("--results", results_dir, "Directory with run artifacts")
        ->required();
    report_cmd->add_option("--out", report_out, "Report output directory");

    int overhead_nf = 1024;
    auto* overhead_cmd =
        app.add_subcommand("overhead", "Per-user ancillary signalling in bits");
    overhead_cmd->add_option("--nf", overhead_nf, "Radiating elements per node");

    LatencyBudget budget;
    auto* aging_cmd = app.add_subcommand("aging", "Aging interval for OGC/OBC architectures");
    aging_cmd->add_option("--user", budget.tau_user_ms, "User return-link latency [ms]");
    aging_cmd->add_option("--feeder-dl", budget.tau_feeder_dl_ms, "Feeder downlink [ms]");
    aging_cmd->add_option("--feeder-ul", budget.tau_feeder_ul_ms, "Feeder uplink [ms]");
    aging_cmd->add_option("--proc", budget.tau_p_ms, "Processing delay [ms]");
    aging_cmd->add_option("--rout", budget.tau_rout_ms, "ISL routing latency [ms]");
    aging_cmd->add_option("--ad", budget.tau_ad_ms, "Additional latency [ms]");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("cfmimo");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (validate_cmd->parsed()) {
            const ScenarioConfig config = assemble_config(opts, env);
            std::cout << "config OK: " << config.effective_scenario_id() << "\n";
            return kExitOk;
        }
        if (run_cmd->parsed()) {
            const ScenarioConfig config = assemble_config(opts, env);
            const RunResult result = run_scenario(config);
            print_summary_rows({result.summary});
            if (result.cached) {
                std::cout << "(cached)\n";
            } else if (!result.scenario_dir.empty()) {
                std::cout << "artifacts in " << result.scenario_dir << "\n";
            }
            return kExitOk;
        }
        if (sweep_cmd->parsed()) {
            const ScenarioConfig base = assemble_config(opts, env);
            const std::vector<ScenarioConfig> configs = expand_sweep(base);
            const SweepResult result = sweep(configs);
            print_summary_rows(result.rows);
            for (const auto& [sid, err] : result.failures) {
                std::cerr << "scenario " << sid << " failed: " << err << "\n";
            }
            return result.failures.empty() ? kExitOk : kExitRuntime;
        }
        if (report_cmd->parsed()) {
            return cmd_report(results_dir, report_out);
        }
        if (overhead_cmd->parsed()) {
            std::cout << "csi_bits_per_user="
                      << signalling_overhead_bits(overhead_nf, OverheadKind::Csi) << "\n"
                      << "location_bits_per_user="
                      << signalling_overhead_bits(overhead_nf, OverheadKind::Location) << "\n";
            return kExitOk;
        }
        if (aging_cmd->parsed()) {
            std::cout << "aging_ogc_ms=" << aging_interval_ms(budget, ComputeArch::Ogc) << "\n"
                      << "aging_obc_ms=" << aging_interval_ms(budget, ComputeArch::Obc) << "\n";
            return kExitOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}

} // namespace cfmimo
