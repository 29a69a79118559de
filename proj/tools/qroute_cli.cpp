// qroute command-line front end.
//
//   qroute route   --input f.qasm --topology chain:6 --isa CX ...
//   qroute bench   --suite benchmarks/ --topologies chain,square ...
//   qroute verify  --original a.qasm --routed b.qasm ...
//   qroute isa     derive|validate|cost ...
//
// Exit codes: 0 ok, 2 parse/validation error, 3 routing failure,
// 4 verification mismatch.

#include <qroute/coverage_derive.hpp>
#include <qroute/qasm.hpp>
#include <qroute/router.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qroute;

namespace {

constexpr int kSchemaVersion = 1;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

std::string fnv1a_hex(const std::string& data) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int default_threads() {
    if (const char* env = std::getenv("QROUTE_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

/// "chain:6", "square:3x4", "heavyhex:2", "file:graph.txt", or a bare
/// family name that is sized to fit `width` qubits.
CouplingGraph parse_topology(const std::string& desc, int width) {
    std::string kind = desc, arg;
    auto colon = desc.find(':');
    if (colon != std::string::npos) {
        kind = desc.substr(0, colon);
        arg = desc.substr(colon + 1);
    }
    if (kind == "file") {
        if (arg.empty()) throw std::runtime_error("topology file: needs a path");
        return load_graph(arg);
    }
    if (kind == "chain") {
        int n = arg.empty() ? std::max(2, width) : std::stoi(arg);
        return chain_graph(n);
    }
    if (kind == "square") {
        if (arg.empty()) {
            int c = 2;
            while (true) {
                int r = (std::max(4, width) + c - 1) / c;
                if (r <= c + 1) return square_graph(std::max(2, r), c);
                ++c;
            }
        }
        auto x = arg.find('x');
        if (x == std::string::npos) throw std::runtime_error("square topology needs RxC");
        return square_graph(std::stoi(arg.substr(0, x)), std::stoi(arg.substr(x + 1)));
    }
    if (kind == "heavyhex") {
        if (arg.empty()) {
            for (int k = 2;; ++k)
                if (heavy_hex_graph(k).n >= width) return heavy_hex_graph(k);
        }
        return heavy_hex_graph(std::stoi(arg));
    }
    throw std::runtime_error("unknown topology: " + desc);
}

IsaSpec resolve_isa(const std::string& name_or_path) {
    const auto& names = builtin_isa_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end())
        return builtin_isa(name_or_path);
    if (fs::exists(name_or_path)) return load_isa(name_or_path);
    throw UnknownIsaError(name_or_path);
}

struct CliRouterOpts {
    RouterConfig cfg;
    std::string mode = "canopus";

    void attach(CLI::App* app) {
        app->add_option("--mode", mode, "canopus|sabre")
            ->check(CLI::IsMember({"canopus", "sabre"}));
        app->add_option("--seed", cfg.seed, "master seed");
        app->add_option("--trials", cfg.trials, "independent routing trials");
        app->add_option("--layout-restarts", cfg.layout_restarts, "layout restarts per trial");
        app->add_option("--rounds", cfg.rounds, "bidirectional layout rounds");
        app->add_option("--w-g", cfg.w_g, "gate-cost weight");
        app->add_option("--w-d", cfg.w_d, "depth weight");
        app->add_option("--k-e", cfg.k_E, "extended-set weight");
        app->add_option("--extended-set-size", cfg.extended_set_size, "lookahead window");
        app->add_option("--stall-limit", cfg.stall_limit, "0 = 3*n");
        app->add_flag("--keep-explicit-swaps", cfg.keep_explicit_swaps,
                      "disable SWAP absorption");
        app->add_flag("--drop-executable-in-delta", cfg.drop_executable_in_delta,
                      "alternative distance-delta rule");
    }

    RouterConfig resolved() const {
        RouterConfig c = cfg;
        c.mode = mode == "sabre" ? RouterMode::sabre_baseline : RouterMode::canopus;
        return c;
    }
};

json config_to_json(const RouterConfig& c) {
    return {{"w_g", c.w_g},
            {"w_d", c.w_d},
            {"k_E", c.k_E},
            {"extended_set_size", c.extended_set_size},
            {"trials", c.trials},
            {"layout_restarts", c.layout_restarts},
            {"rounds", c.rounds},
            {"seed", c.seed},
            {"mode", c.mode == RouterMode::sabre_baseline ? "sabre" : "canopus"},
            {"stall_limit", c.stall_limit},
            {"keep_explicit_swaps", c.keep_explicit_swaps},
            {"drop_executable_in_delta", c.drop_executable_in_delta}};
}

struct RunOutcome {
    RouteResult result;
    CostReport pre_cx;
    double overhead_count = 0, overhead_depth = 0;
    double wall_time = 0;
};

RunOutcome run_route(const CircuitDag& logical, const CouplingGraph& graph, const IsaSpec& isa,
                     const RouterConfig& cfg) {
    RunOutcome o;
    o.pre_cx = cost_report(logical, builtin_isa("CX"));
    auto t0 = std::chrono::steady_clock::now();
    o.result = cfg.mode == RouterMode::sabre_baseline ? route_baseline(logical, graph, cfg)
                                                      : route(logical, graph, isa, cfg);
    o.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.overhead_count = o.pre_cx.c_count > 0 ? o.result.report.c_count / o.pre_cx.c_count : 1.0;
    o.overhead_depth = o.pre_cx.c_depth > 0 ? o.result.report.c_depth / o.pre_cx.c_depth : 1.0;
    return o;
}

json run_record(const std::string& input_path, const std::string& input_text,
                const std::string& topology, const std::string& isa_name,
                const RouterConfig& cfg, const RunOutcome& o) {
    return {{"schema_version", kSchemaVersion},
            {"input", {{"path", input_path}, {"fnv1a64", fnv1a_hex(input_text)}}},
            {"topology", topology},
            {"isa", isa_name},
            {"config", config_to_json(cfg)},
            {"pre", report_to_json(o.pre_cx)},
            {"post", report_to_json(o.result.report)},
            {"initial_l2p", o.result.initial.l2p},
            {"final_l2p", o.result.final_map.l2p},
            {"swap_insertions", o.result.swap_insertions},
            {"routing_overhead_count", o.overhead_count},
            {"routing_overhead_depth", o.overhead_depth},
            {"wall_time", o.wall_time}};
}

std::string mapping_line(const std::vector<int>& l2p) {
    std::ostringstream os;
    for (size_t i = 0; i < l2p.size(); ++i) os << (i ? " " : "") << l2p[i];
    os << "\n";
    return os.str();
}

std::vector<int> load_mapping(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<int> v;
    int x;
    while (in >> x) v.push_back(x);
    if (v.empty()) throw std::runtime_error("empty mapping file: " + path);
    return v;
}

// --- route ----------------------------------------------------------------

int cmd_route(const std::string& input, const std::string& topology, const std::string& isa_arg,
              const CliRouterOpts& opts, const std::string& out_path,
              const std::string& report_path, const std::string& imap_path,
              const std::string& fmap_path) {
    std::string text;
    CircuitDag logical;
    CouplingGraph graph;
    IsaSpec isa;
    RouterConfig cfg;
    try {
        text = read_file(input);
        logical = consolidate_2q_blocks(parse_qasm(text));
        graph = parse_topology(topology, logical.qubit_count);
        isa = resolve_isa(isa_arg);
        cfg = opts.resolved();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    RunOutcome o;
    try {
        o = run_route(logical, graph, isa, cfg);
    } catch (const std::exception& e) {
        std::cerr << "routing failed: " << e.what() << "\n";
        return 3;
    }
    json rec = run_record(input, text, topology, isa.name, cfg, o);
    if (!out_path.empty()) write_file(out_path, emit_qasm(o.result.circuit));
    if (!report_path.empty()) write_file(report_path, rec.dump(2) + "\n");
    if (!imap_path.empty()) write_file(imap_path, mapping_line(o.result.initial.l2p));
    if (!fmap_path.empty()) write_file(fmap_path, mapping_line(o.result.final_map.l2p));
    std::cout << rec.dump(2) << "\n";
    return 0;
}

// --- verify ---------------------------------------------------------------

Eigen::MatrixXcd perm_matrix(const std::vector<int>& l2p, int n) {
    long dim = 1l << n;
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(dim, dim);
    for (long x = 0; x < dim; ++x) {
        long y = 0;
        for (int l = 0; l < n; ++l)
            if (x & (1l << l)) y |= 1l << (l < static_cast<int>(l2p.size()) ? l2p[l] : l);
        p(y, x) = 1;
    }
    return p;
}

int cmd_verify(const std::string& original, const std::string& routed, const std::string& imap,
               const std::string& fmap) {
    try {
        CircuitDag a = strip_measurements(parse_qasm(read_file(original)));
        CircuitDag b = strip_measurements(parse_qasm(read_file(routed)));
        int n = std::max(a.qubit_count, b.qubit_count);
        a.qubit_count = b.qubit_count = n;
        std::vector<int> init, fin;
        for (int i = 0; i < n; ++i) {
            init.push_back(i);
            fin.push_back(i);
        }
        if (!imap.empty()) init = load_mapping(imap);
        if (!fmap.empty()) fin = load_mapping(fmap);
        Eigen::MatrixXcd ua = simulate_unitary(a);
        Eigen::MatrixXcd ub = simulate_unitary(b);
        Eigen::MatrixXcd rhs = perm_matrix(fin, n) * ua * perm_matrix(init, n).adjoint();
        std::complex<double> tr = (rhs.adjoint() * ub).trace();
        if (std::abs(tr) > 1e-12) rhs *= tr / std::abs(tr);
        double frob = (ub - rhs).norm();
        double dist = frob;
        if (frob > 1e-8) {
            // report the spectral norm when the quick bound fails
            Eigen::BDCSVD<Eigen::MatrixXcd> svd(ub - rhs);
            dist = svd.singularValues()(0);
        }
        std::cout << "distance " << dist << "\n";
        return dist <= 1e-8 ? 0 : 4;
    } catch (const TooLarge& e) {
        std::cerr << "error: TooLarge: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

// --- isa ------------------------------------------------------------------

int cmd_isa_derive(const std::string& name, double budget, double grid, int threads,
                   const std::string& out) {
    try {
        DeriveOptions opts;
        opts.threads = threads;
        IsaSpec isa = derive_isa(name, builtin_basis(name), budget, grid, opts);
        validate_isa(isa);
        save_isa(isa, out.empty() ? name + ".json" : out);
        std::cout << "levels " << isa.coverage.size() << " swap_cost " << isa.swap_cost << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_isa_validate(const std::string& isa_arg, double grid) {
    try {
        IsaSpec isa = resolve_isa(isa_arg);
        validate_isa(isa, grid);
        std::cout << "ok\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_isa_cost(const std::string& isa_arg, const std::vector<double>& coeffs) {
    try {
        IsaSpec isa = resolve_isa(isa_arg);
        CanonicalCoeffs k{coeffs.at(0), coeffs.at(1), coeffs.at(2)};
        double c = synth_cost(isa, k);
        char buf[32];
        if (c == std::floor(c))
            std::snprintf(buf, sizeof buf, "%.1f", c);
        else
            std::snprintf(buf, sizeof buf, "%g", c);
        std::cout << buf << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

// --- bench ----------------------------------------------------------------

struct BenchCell {
    std::string benchmark, topology, isa, mode;
    bool ok = false;
    std::string error;
    double overhead_count = 0, overhead_depth = 0, wall_time = 0;
    CostReport post;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

int cmd_bench(const std::string& suite, const std::string& topologies, const std::string& isas,
              const std::string& modes, const std::string& seeds, const CliRouterOpts& opts,
              const std::string& report_path) {
    std::vector<std::string> files;
    try {
        for (const auto& e : fs::directory_iterator(suite))
            if (e.path().extension() == ".qasm") files.push_back(e.path().string());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::sort(files.begin(), files.end());
    std::vector<std::string> topo_list = split_list(topologies);
    std::vector<std::string> isa_list = split_list(isas);
    std::vector<std::string> mode_list = split_list(modes);
    std::vector<uint64_t> seed_list;
    for (const auto& s : split_list(seeds)) seed_list.push_back(std::stoull(s));
    if (seed_list.empty()) seed_list.push_back(opts.cfg.seed);

    std::vector<BenchCell> cells;
    for (const auto& f : files)
        for (const auto& t : topo_list)
            for (const auto& i : isa_list)
                for (const auto& m : mode_list)
                    cells.push_back({fs::path(f).stem().string() , t, i, m});
    std::vector<std::string> paths;
    for (const auto& f : files) paths.push_back(f);

    auto run_cell = [&](BenchCell& cell, const std::string& path) {
        try {
            CircuitDag logical = consolidate_2q_blocks(parse_qasm(read_file(path)));
            CouplingGraph graph = parse_topology(cell.topology, logical.qubit_count);
            IsaSpec isa = resolve_isa(cell.isa);
            CliRouterOpts o2 = opts;
            o2.mode = cell.mode;
            // best result over the seed list
            bool have = false;
            for (uint64_t s : seed_list) {
                RouterConfig cfg = o2.resolved();
                cfg.seed = s;
                RunOutcome o = run_route(logical, graph, isa, cfg);
                if (!have || o.overhead_count < cell.overhead_count ||
                    (o.overhead_count == cell.overhead_count &&
                     o.overhead_depth < cell.overhead_depth)) {
                    cell.overhead_count = o.overhead_count;
                    cell.overhead_depth = o.overhead_depth;
                    cell.post = o.result.report;
                }
                cell.wall_time += o.wall_time;
                have = true;
            }
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    };

    int nthreads = std::min<int>(default_threads(), static_cast<int>(cells.size()));
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            size_t file_idx = i / (topo_list.size() * isa_list.size() * mode_list.size());
            run_cell(cells[i], paths[file_idx]);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // text table
    std::printf("%-14s %-10s %-9s %-8s %10s %10s %9s\n", "benchmark", "topology", "isa",
                "mode", "ovh_count", "ovh_depth", "time_s");
    for (const auto& c : cells) {
        if (c.ok)
            std::printf("%-14s %-10s %-9s %-8s %10.4f %10.4f %9.3f\n", c.benchmark.c_str(),
                        c.topology.c_str(), c.isa.c_str(), c.mode.c_str(), c.overhead_count,
                        c.overhead_depth, c.wall_time);
        else
            std::printf("%-14s %-10s %-9s %-8s   FAILED: %s\n", c.benchmark.c_str(),
                        c.topology.c_str(), c.isa.c_str(), c.mode.c_str(), c.error.c_str());
    }
    // geometric means per (topology, isa, mode)
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const BenchCell*>>
        groups;
    for (const auto& c : cells)
        if (c.ok) groups[{c.topology, c.isa, c.mode}].push_back(&c);
    json jgroups = json::array();
    std::printf("\n%-14s %-10s %-9s %-8s %10s %10s\n", "geomean", "topology", "isa", "mode",
                "ovh_count", "ovh_depth");
    for (const auto& [key, group] : groups) {
        double lc = 0, ld = 0;
        for (const auto* c : group) {
            lc += std::log(c->overhead_count);
            ld += std::log(c->overhead_depth);
        }
        double gc = std::exp(lc / group.size()), gd = std::exp(ld / group.size());
        std::printf("%-14s %-10s %-9s %-8s %10.4f %10.4f\n", "", std::get<0>(key).c_str(),
                    std::get<1>(key).c_str(), std::get<2>(key).c_str(), gc, gd);
        jgroups.push_back({{"topology", std::get<0>(key)},
                           {"isa", std::get<1>(key)},
                           {"mode", std::get<2>(key)},
                           {"geomean_overhead_count", gc},
                           {"geomean_overhead_depth", gd},
                           {"cells", group.size()}});
    }
    json jcells = json::array();
    bool any_failed = false;
    for (const auto& c : cells) {
        json jc = {{"benchmark", c.benchmark}, {"topology", c.topology},
                   {"isa", c.isa},           {"mode", c.mode},
                   {"ok", c.ok}};
        if (c.ok) {
            jc["overhead_count"] = c.overhead_count;
            jc["overhead_depth"] = c.overhead_depth;
            jc["post"] = report_to_json(c.post);
        } else {
            jc["error"] = c.error;
            any_failed = true;
        }
        jcells.push_back(jc);
    }
    json out = {{"schema_version", kSchemaVersion},
                {"config", config_to_json(opts.resolved())},
                {"seeds", seed_list},
                {"cells", jcells},
                {"geomeans", jgroups}};
    if (!report_path.empty()) write_file(report_path, out.dump(2) + "\n");
    return any_failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ISA-aware qubit routing toolkit"};
    app.require_subcommand(1);

    // route
    auto* route_cmd = app.add_subcommand("route", "route a circuit onto a topology");
    std::string input, topology, isa_arg = "CX", out_path, report_path, imap_path, fmap_path;
    CliRouterOpts ropts;
    route_cmd->add_option("--input", input, "input OpenQASM 2.0 file")->required();
    route_cmd->add_option("--topology", topology, "chain:N|square:RxC|heavyhex:K|file:path")
        ->required();
    route_cmd->add_option("--isa", isa_arg, "ISA name or coverage file");
    route_cmd->add_option("--out", out_path, "routed QASM output path");
    route_cmd->add_option("--report", report_path, "JSON run record path");
    route_cmd->add_option("--initial-map-out", imap_path, "initial l2p mapping output");
    route_cmd->add_option("--final-map-out", fmap_path, "final l2p mapping output");
    ropts.attach(route_cmd);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "run the benchmark harness");
    std::string suite, topologies = "chain", isas = "CX", modes = "canopus,sabre", seeds;
    std::string bench_report;
    CliRouterOpts bopts;
    bench_cmd->add_option("--suite", suite, "directory of .qasm benchmarks")->required();
    bench_cmd->add_option("--topologies", topologies, "comma-separated topology list");
    bench_cmd->add_option("--isas", isas, "comma-separated ISA list");
    bench_cmd->add_option("--modes", modes, "comma-separated mode list");
    bench_cmd->add_option("--seeds", seeds, "comma-separated master seeds");
    bench_cmd->add_option("--report", bench_report, "JSON report path");
    bopts.attach(bench_cmd);

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "check routed-vs-original equivalence");
    std::string v_orig, v_routed, v_imap, v_fmap;
    verify_cmd->add_option("--original", v_orig, "original QASM")->required();
    verify_cmd->add_option("--routed", v_routed, "routed QASM")->required();
    verify_cmd->add_option("--initial-map", v_imap, "initial l2p mapping file");
    verify_cmd->add_option("--final-map", v_fmap, "final l2p mapping file");

    // isa
    auto* isa_cmd = app.add_subcommand("isa", "coverage derivation and queries");
    isa_cmd->require_subcommand(1);
    auto* derive_cmd = isa_cmd->add_subcommand("derive", "derive a coverage file");
    std::string d_name, d_out;
    double d_budget = 3.0, d_grid = 0.025;
    int d_threads = 0;
    derive_cmd->add_option("--name", d_name, "builtin ISA name")->required();
    derive_cmd->add_option("--budget", d_budget, "cost budget");
    derive_cmd->add_option("--grid", d_grid, "grid pitch");
    derive_cmd->add_option("--threads", d_threads, "0 = hardware concurrency");
    derive_cmd->add_option("--out", d_out, "output path");
    auto* validate_cmd = isa_cmd->add_subcommand("validate", "check coverage invariants");
    std::string val_isa;
    double val_grid = 0.05;
    validate_cmd->add_option("--isa", val_isa, "ISA name or coverage file")->required();
    validate_cmd->add_option("--grid", val_grid, "membership sampling pitch");
    auto* cost_cmd = isa_cmd->add_subcommand("cost", "print synth_cost for coefficients");
    std::string cost_isa = "CX";
    std::vector<double> cost_coeffs;
    cost_cmd->add_option("--isa", cost_isa, "ISA name or coverage file");
    cost_cmd->add_option("--coeffs", cost_coeffs, "a,b,c")->delimiter(',')->expected(3);

    CLI11_PARSE(app, argc, argv);

    if (route_cmd->parsed())
        return cmd_route(input, topology, isa_arg, ropts, out_path, report_path, imap_path,
                         fmap_path);
    if (bench_cmd->parsed())
        return cmd_bench(suite, topologies, isas, modes, seeds, bopts, bench_report);
    if (verify_cmd->parsed()) return cmd_verify(v_orig, v_routed, v_imap, v_fmap);
    if (isa_cmd->parsed()) {
        if (derive_cmd->parsed())
            return cmd_isa_derive(d_name, d_budget, d_grid, d_threads, d_out);
        if (validate_cmd->parsed()) return cmd_isa_validate(val_isa, val_grid);
        if (cost_cmd->parsed()) return cmd_isa_cost(cost_isa, cost_coeffs);
    }
    return 2;
}
