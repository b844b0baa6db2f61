// nnv: decide verification problems, emit reductions and SAT gadgets.
//
// Exit status: 0 when a question was decided (either way) or a file was
// emitted, 2 on usage or input errors, 3 on internal errors.

#include "nnv/io.hpp"
#include "nnv/minimize.hpp"
#include "nnv/reductions.hpp"
#include "nnv/verifier.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace nnv;

namespace {

constexpr int kUsage = 2;
constexpr int kInternal = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InstanceFlags {
    std::string instance, net, net2, inspec, outspec, metric = "linf", eps, delta, lip, center;
    std::size_t label = 0;
    bool strict = false;
};

struct SearchFlags {
    std::string mode = "dfs";
    unsigned parallel = 1;
    std::size_t samples = 64;
    std::uint64_t seed = 1;

    SearchOptions options() const {
        SearchOptions o;
        if (mode == "enumerate") o.mode = SearchMode::Enumerate;
        o.threads = parallel;
        o.sample_trials = samples;
        o.seed = seed;
        return o;
    }
};

void add_instance_flags(CLI::App* cmd, InstanceFlags& f) {
    cmd->add_option("--instance", f.instance, "Instance JSON file (replaces the individual flags)");
    cmd->add_option("--net", f.net, "Network JSON file");
    cmd->add_option("--net2", f.net2, "Second network JSON file (ne)");
    cmd->add_option("--inspec", f.inspec, "Input spec JSON file (nnr, vip)");
    cmd->add_option("--outspec", f.outspec, "Output spec JSON file (nnr, vip)");
    cmd->add_option("--metric", f.metric, "l1 or linf")->check(CLI::IsMember({"l1", "linf"}));
    cmd->add_option("--eps", f.eps, "Input radius, p/q or inf");
    cmd->add_option("--delta", f.delta, "Output radius, p/q or inf");
    cmd->add_option("--lip", f.lip, "Lipschitz constant, p/q");
    cmd->add_option("--center", f.center, "Comma-separated center point");
    cmd->add_option("--label", f.label, "1-based label (cr)");
    cmd->add_flag("--strict", f.strict, "Strict argmax (cr, acr)");
}

void add_search_flags(CLI::App* cmd, SearchFlags& f) {
    cmd->add_option("--mode", f.mode, "dfs or enumerate")->check(CLI::IsMember({"dfs", "enumerate"}));
    cmd->add_option("--parallel", f.parallel, "Worker threads for the search")->check(CLI::PositiveNumber);
    cmd->add_option("--samples", f.samples, "Random points tried before the search");
    cmd->add_option("--seed", f.seed, "Seed for the sampling pre-pass");
}

Json center_json(const std::string& text) {
    Json a = Json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw UsageError("empty entry in --center");
        a.push_back(item);
    }
    return a;
}

ProblemInstance load_instance(const std::string& problem, const InstanceFlags& f) {
    if (!f.instance.empty()) {
        ProblemInstance inst = instance_from_json(read_json_file(f.instance));
        if (!problem.empty() && problem_name(inst) != problem)
            throw UsageError("instance file holds a " + std::string(problem_name(inst)) + " instance, not " + problem);
        return inst;
    }
    Json j;
    j["problem"] = problem;
    auto need = [&](const std::string& value, const char* flag) {
        if (value.empty()) throw UsageError(problem + " needs " + flag);
        return value;
    };
    j["net"] = read_json_file(need(f.net, "--net"));
    j["metric"] = f.metric;
    if (problem == "nnr" || problem == "vip") {
        j["inspec"] = read_json_file(need(f.inspec, "--inspec"));
        j["outspec"] = read_json_file(need(f.outspec, "--outspec"));
    } else if (problem == "ne") {
        j["net2"] = read_json_file(need(f.net2, "--net2"));
    } else {
        j["eps"] = need(f.eps, "--eps");
        if (problem == "sr" || problem == "gsr") j["delta"] = need(f.delta, "--delta");
        if (problem == "lr" || problem == "glr") j["lip"] = need(f.lip, "--lip");
        if (problem == "sr" || problem == "cr" || problem == "acr" || problem == "lr")
            j["center"] = center_json(need(f.center, "--center"));
        if (problem == "cr") {
            if (f.label == 0) throw UsageError("cr needs --label");
            j["label"] = f.label;
        }
        j["strict"] = f.strict;
    }
    return instance_from_json(j);
}

void emit(const Json& j, const std::string& path) {
    if (path.empty()) std::cout << j.dump() << '\n';
    else write_json_file(path, j);
}

CrInstance finish_pure(CrInstance cr, const ReduceOptions& opts) {
    if (opts.pure_relu) cr.net = id_to_relu(cr.net);
    return cr;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void summary(const std::string& what, bool holds, const SearchStats& s, double secs) {
    std::cerr << what << ": " << (holds ? "holds" : "does not hold") << " (" << s.patterns_explored << " patterns, "
              << s.lp_count << " LPs, " << secs << " s)\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact verification of ReLU/identity networks"};
    app.require_subcommand(1);

    // check
    auto* check = app.add_subcommand("check", "Decide a problem instance and print the verdict as JSON");
    std::string problem;
    InstanceFlags inst_flags;
    SearchFlags search_flags;
    std::string nodes_text;
    std::size_t max_hidden = 16;
    check->add_option("problem", problem, "nnr, vip, ne, sr, cr, acr, lr, gsr, glr, nece or anece")
        ->required()
        ->check(CLI::IsMember({"nnr", "vip", "ne", "sr", "cr", "acr", "lr", "gsr", "glr", "nece", "anece"}));
    add_instance_flags(check, inst_flags);
    add_search_flags(check, search_flags);
    check->add_option("--nodes", nodes_text, "Comma-separated layer:index list (nece)");
    check->add_option("--max-hidden", max_hidden, "Hidden-node cap (anece)");

    // certify
    auto* certify = app.add_subcommand("certify", "Check a certificate against an instance with one LP");
    InstanceFlags cert_inst;
    std::string cert_file;
    add_instance_flags(certify, cert_inst);
    certify->add_option("--certificate", cert_file, "Certificate JSON file (or a verdict containing one)")->required();
    std::string cert_problem;
    certify->add_option("--problem", cert_problem, "Problem name when the instance is given by flags");

    // reduce
    auto* reduce = app.add_subcommand("reduce", "Emit the target instance of a reduction");
    std::string reduction, out_path;
    InstanceFlags red_flags;
    bool pure_relu = false, legacy = false, for_sr = false;
    reduce->add_option("reduction", reduction)
        ->required()
        ->check(CLI::IsMember({"sr2vip", "cr2vip", "sr2cr", "cr2sr", "acr2cr", "cr2acr", "ne2cr", "gsr2ne", "ne2nece",
                               "ne2anece", "retract"}));
    add_instance_flags(reduce, red_flags);
    reduce->add_option("-o,--output", out_path, "Output file (default: standard output)");
    reduce->add_flag("--pure-relu", pure_relu, "Replace hidden id nodes by ReLU pairs");
    reduce->add_flag("--legacy", legacy, "retract: printed negative branch instead of the symmetric one");
    reduce->add_flag("--for-sr", for_sr, "retract: append the distance-to-center output");

    // gadget
    auto* gadget = app.add_subcommand("gadget", "Build the 3-SAT hardness instance of a DIMACS formula");
    std::string cnf_path, target = "gsr", net_out;
    gadget->add_option("--cnf", cnf_path, "DIMACS file")->required();
    gadget->add_option("--target", target)->check(CLI::IsMember({"gsr", "lr", "glr"}));
    gadget->add_option("-o,--output", out_path, "Instance output file (default: standard output)");
    gadget->add_option("--net-out", net_out, "Also write the network alone to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        auto start = std::chrono::steady_clock::now();
        if (check->parsed()) {
            SearchOptions opts = search_flags.options();
            if (problem == "nece" || problem == "anece") {
                if (inst_flags.net.empty()) throw UsageError(problem + " needs --net");
                Network net = network_from_json(read_json_file(inst_flags.net));
                if (problem == "nece") {
                    if (nodes_text.empty()) throw UsageError("nece needs --nodes");
                    std::set<NodeRef> nodes = nodes_from_json(center_json(nodes_text));
                    Verdict v = decide_nece(net, nodes, opts);
                    std::cout << to_json(v).dump() << '\n';
                    summary("nece", v.holds, v.stats, seconds_since(start));
                } else {
                    AneceOptions ao;
                    ao.max_hidden = max_hidden;
                    ao.search = opts;
                    AneceResult r = decide_anece(net, ao);
                    std::cout << to_json(r).dump() << '\n';
                    summary("anece", r.holds, r.stats, seconds_since(start));
                }
                return 0;
            }
            ProblemInstance inst = load_instance(problem, inst_flags);
            Verdict v = decide(inst, opts);
            std::cout << to_json(v).dump() << '\n';
            summary(problem, v.holds, v.stats, seconds_since(start));
            return 0;
        }
        if (certify->parsed()) {
            ProblemInstance inst = load_instance(cert_problem, cert_inst);
            Json j = read_json_file(cert_file);
            if (j.contains("certificate")) j = j["certificate"];
            if (j.is_null()) throw UsageError("the verdict carries no certificate");
            bool valid = check_certificate(inst, certificate_from_json(j));
            std::cout << Json{{"valid", valid}}.dump() << '\n';
            std::cerr << "certificate " << (valid ? "accepted" : "rejected") << '\n';
            return 0;
        }
        if (reduce->parsed()) {
            ReduceOptions ro{pure_relu};
            auto source_problem = [&](const char* p) { return load_instance(p, red_flags); };
            Json out;
            std::string meta;
            if (reduction == "sr2vip") {
                out = to_json(ProblemInstance{sr_to_vip(std::get<SrInstance>(source_problem("sr")), ro)});
            } else if (reduction == "cr2vip") {
                out = to_json(ProblemInstance{cr_to_vip(std::get<CrInstance>(source_problem("cr")), ro)});
            } else if (reduction == "sr2cr") {
                CrInstance cr = sr_to_cr(std::get<SrInstance>(source_problem("sr")), ro);
                meta = "label " + std::to_string(cr.label) + " is the delta node";
                out = to_json(ProblemInstance{cr});
            } else if (reduction == "cr2sr") {
                out = to_json(ProblemInstance{cr_to_sr(std::get<CrInstance>(source_problem("cr")), ro)});
            } else if (reduction == "acr2cr") {
                out = Json::array();
                for (auto& cr : acr_to_cr(std::get<AcrInstance>(source_problem("acr"))))
                    out.push_back(to_json(ProblemInstance{finish_pure(cr, ro)}));
                meta = "acr holds iff one of the " + std::to_string(out.size()) + " cr instances holds";
            } else if (reduction == "cr2acr") {
                out = to_json(ProblemInstance{cr_to_acr(std::get<CrInstance>(source_problem("cr")), ro)});
            } else if (reduction == "ne2cr") {
                out = to_json(ProblemInstance{ne_to_cr(std::get<NeInstance>(source_problem("ne")), ro)});
            } else if (reduction == "gsr2ne") {
                out = to_json(ProblemInstance{gsr_to_ne(std::get<GsrInstance>(source_problem("gsr")), ro)});
            } else if (reduction == "ne2nece" || reduction == "ne2anece") {
                auto ne = std::get<NeInstance>(source_problem("ne"));
                if (reduction == "ne2nece") {
                    auto [p, y] = ne_to_nece(ne.net1, ne.net2);
                    if (pure_relu) p = id_to_relu(p);
                    out = {{"net", to_json(p)}, {"nodes", to_json(std::set<NodeRef>{y})}};
                    meta = "node " + to_string(y) + " is necessary iff the networks differ";
                } else {
                    if (pure_relu)
                        std::cerr << "note: --pure-relu is ignored for ne2anece, since splitting id nodes changes the node set\n";
                    Network p = ne_to_anece(ne.net1, ne.net2);
                    out = {{"net", to_json(p)}};
                    meta = std::to_string(p.hidden_count()) + " hidden nodes; all necessary iff the networks are equivalent";
                }
            } else {
                if (red_flags.net.empty() || red_flags.eps.empty() || red_flags.center.empty())
                    throw UsageError("retract needs --net, --eps and --center");
                Network net = network_from_json(read_json_file(red_flags.net));
                ExtRational eps = parse_ext_rational(red_flags.eps);
                RatVector center = vector_from_json(center_json(red_flags.center));
                Network r = metric_retraction(net, parse_metric(red_flags.metric), center, eps,
                                              legacy ? RetractionMode::Legacy : RetractionMode::Symmetric, for_sr);
                if (pure_relu) r = id_to_relu(r);
                out = to_json(r);
            }
            emit(out, out_path);
            std::cerr << reduction << ": emitted" << (out_path.empty() ? "" : " " + out_path)
                      << (meta.empty() ? "" : "; " + meta) << '\n';
            return 0;
        }
        if (gadget->parsed()) {
            std::ifstream in(cnf_path);
            if (!in) throw UsageError("cannot read " + cnf_path);
            std::stringstream text;
            text << in.rdbuf();
            Cnf cnf = parse_dimacs(text.str());
            ProblemInstance inst;
            if (target == "gsr") inst = sat3_to_gsr(cnf);
            else if (target == "lr") inst = sat3_to_lr(cnf);
            else inst = sat3_to_glr(cnf);
            if (!net_out.empty()) write_json_file(net_out, to_json(sat3_network(cnf)));
            emit(to_json(inst), out_path);
            std::cerr << "gadget: " << cnf.num_vars << " variables, " << cnf.clauses.size() << " clauses, target "
                      << target << '\n';
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kInternal;
}
