// Command-line front end: `scan` runs the pair scan over a CSV and emits a
// ranked report; `synth` generates a planted-structure dataset for testing.
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <simpscan/simpscan.hpp>

namespace {

struct ScanArgs {
    std::string input;
    std::string outcome;
    std::vector<std::string> include;
    std::vector<std::string> exclude;
    std::size_t min_bin_size = 100;
    std::size_t max_bins = 20;
    double alpha = 0.05;
    bool require_reversal = false;
    bool bh = false;
    std::size_t top_k = 0;
    std::string format = "markdown";
    std::string out;
    std::string heatmap_dir;
    std::size_t heatmap_bins = 20;
    std::size_t workers = 0;
};

struct SynthArgs {
    std::string spec_path;
    std::string out;
    std::int64_t seed_override = -1;
};

std::string sanitize_name(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-';
        out += ok ? c : '_';
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw simpscan::FileError("cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw simpscan::FileError("failed writing '" + path + "'");
}

int run_scan(const ScanArgs& args) {
    simpscan::SchemaConfig schema;
    schema.outcome = args.outcome;
    schema.include = args.include;
    schema.exclude = args.exclude;
    const simpscan::Dataset ds = simpscan::load_csv(args.input, schema);

    simpscan::ScanConfig cfg;
    cfg.alpha_level = args.alpha;
    cfg.partition.min_bin_size = args.min_bin_size;
    cfg.partition.max_bins = args.max_bins;
    cfg.top_k = args.top_k;
    cfg.require_reversal = args.require_reversal;
    cfg.bh_correction = args.bh;
    cfg.workers = args.workers;

    const simpscan::ScanReport report = simpscan::scan(ds, cfg);

    simpscan::ReportFormat fmt = simpscan::ReportFormat::markdown;
    if (args.format == "json") fmt = simpscan::ReportFormat::json;
    else if (args.format == "csv") fmt = simpscan::ReportFormat::csv;

    std::ostringstream body;
    simpscan::emit_report(report, fmt, body);
    if (args.out.empty())
        std::cout << body.str();
    else
        write_text_file(args.out, body.str());

    if (!args.heatmap_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(args.heatmap_dir, ec);
        if (ec)
            throw simpscan::FileError("cannot create directory '" + args.heatmap_dir +
                                      "': " + ec.message());
        const std::size_t limit = simpscan::report_row_count(report);
        simpscan::HeatmapConfig hcfg;
        hcfg.x_j_bins = args.heatmap_bins;
        for (std::size_t i = 0; i < limit; ++i) {
            const auto& r = report.results[i];
            const simpscan::PairView pv = simpscan::pair_view(ds, r.x_j, r.x_c);
            const simpscan::HeatmapGrid grid = simpscan::heatmap_grid(r, pv, hcfg);
            const std::string stem = "heatmap_" + std::to_string(i + 1) + "_" +
                                     sanitize_name(r.x_j) + "__" + sanitize_name(r.x_c);
            std::ostringstream cells, edges;
            simpscan::heatmap_csv(grid, cells);
            simpscan::heatmap_edges_csv(grid, edges);
            const auto dir = std::filesystem::path(args.heatmap_dir);
            write_text_file((dir / (stem + ".csv")).string(), cells.str());
            write_text_file((dir / (stem + "_edges.csv")).string(), edges.str());
        }
    }
    return 0;
}

simpscan::PlantedSpec parse_planted_spec(const nlohmann::json& j) {
    simpscan::PlantedSpec spec;
    if (!j.is_object() || !j.contains("groups") || !j["groups"].is_array())
        throw simpscan::InvalidSpec("synth spec: top-level object with a 'groups' array required");
    for (const auto& g : j["groups"]) {
        simpscan::PlantedGroup pg;
        if (!g.is_object() || !g.contains("size"))
            throw simpscan::InvalidSpec("synth spec: each group needs at least a 'size'");
        pg.size = g["size"].get<std::size_t>();
        pg.alpha = g.value("alpha", 0.0);
        pg.beta = g.value("beta", 0.0);
        pg.x_center = g.value("x_center", 0.0);
        pg.x_spread = g.value("x_spread", 1.0);
        spec.groups.push_back(pg);
    }
    spec.noise_covariates = j.value("noise_covariates", std::size_t{0});
    const std::string kind = j.value("noise_kind", std::string("uniform"));
    if (kind == "uniform") spec.noise_kind = simpscan::NoiseKind::uniform;
    else if (kind == "normal") spec.noise_kind = simpscan::NoiseKind::normal;
    else throw simpscan::InvalidSpec("synth spec: noise_kind must be 'uniform' or 'normal'");
    spec.seed = j.value("seed", std::uint64_t{0});
    return spec;
}

int run_synth(const SynthArgs& args) {
    std::ifstream in(args.spec_path, std::ios::binary);
    if (!in) throw simpscan::FileError("cannot open '" + args.spec_path + "' for reading");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw simpscan::InvalidSpec("synth spec: " + std::string(e.what()));
    }
    simpscan::PlantedSpec spec = parse_planted_spec(j);
    if (args.seed_override >= 0) spec.seed = static_cast<std::uint64_t>(args.seed_override);

    const auto [ds, gt] = simpscan::generate(spec);
    simpscan::write_csv(ds, args.out);
    std::cerr << "synth: seed=" << spec.seed << " rows=" << ds.n_rows()
              << " reversal_planted=" << (simpscan::reversal_planted(gt) ? "true" : "false")
              << " -> " << args.out << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subgroup trend scanner: finds covariate pairs whose per-subgroup "
                 "outcome trends contradict the pooled trend"};
    app.require_subcommand(1);

    ScanArgs sa;
    CLI::App* scan = app.add_subcommand("scan", "Scan a CSV for subgroup trend structure");
    scan->add_option("--input", sa.input, "input CSV path")->required();
    scan->add_option("--outcome", sa.outcome, "binary outcome column name")->required();
    scan->add_option("--include", sa.include, "covariates to include (default all)")
        ->delimiter(',');
    scan->add_option("--exclude", sa.exclude, "covariates to exclude")->delimiter(',');
    scan->add_option("--min-bin-size", sa.min_bin_size, "minimum rows per subgroup bin")
        ->check(CLI::PositiveNumber);
    scan->add_option("--max-bins", sa.max_bins, "maximum subgroup bins per partition")
        ->check(CLI::PositiveNumber);
    scan->add_option("--alpha", sa.alpha, "significance level")
        ->check(CLI::Range(1e-12, 0.999999));
    scan->add_flag("--require-reversal", sa.require_reversal,
                   "report only pairs with a trend reversal");
    scan->add_flag("--bh", sa.bh, "Benjamini-Hochberg correction across pairs");
    scan->add_option("--top-k", sa.top_k, "report at most this many pairs (0 = all)");
    scan->add_option("--format", sa.format, "report format")
        ->check(CLI::IsMember({"json", "csv", "markdown"}));
    scan->add_option("--out", sa.out, "write the report here instead of stdout");
    scan->add_option("--heatmap-dir", sa.heatmap_dir, "emit per-pair heatmap CSVs here");
    scan->add_option("--heatmap-bins", sa.heatmap_bins, "heatmap display columns")
        ->check(CLI::PositiveNumber);
    scan->add_option("--workers", sa.workers, "scan worker threads (0 = auto)");

    SynthArgs ya;
    CLI::App* synth = app.add_subcommand("synth", "Generate a planted-structure dataset");
    synth->add_option("--spec", ya.spec_path, "JSON generator spec path")->required();
    synth->add_option("--out", ya.out, "output CSV path")->required();
    synth->add_option("--seed", ya.seed_override, "override the seed in the spec file")
        ->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
        return 1;
    }

    try {
        if (scan->parsed()) return run_scan(sa);
        if (synth->parsed()) return run_synth(ya);
        std::cerr << "usage error: no subcommand given\n";
        return 1;
    } catch (const simpscan::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
