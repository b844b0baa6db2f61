#include "nnv/io.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace nnv {

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
    throw std::invalid_argument(where + ": " + what);
}

const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object()) schema(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema(where, std::string("missing field '") + key + "'");
    return *it;
}

Rational rational_at(const Json& j, const std::string& where) {
    try {
        if (j.is_string()) return parse_rational(j.get<std::string>());
        if (j.is_number_integer()) return Rational(j.get<long>());
    } catch (const std::invalid_argument& e) {
        schema(where, e.what());
    }
    schema(where, "expected a rational string such as \"3/4\"");
}

ExtRational ext_at(const Json& j, const std::string& where) {
    if (j.is_string() && j.get<std::string>() == "inf") return ExtRational::infinity();
    return ExtRational(rational_at(j, where));
}

RatVector vector_at(const Json& j, const std::string& where) {
    if (!j.is_array()) schema(where, "expected an array of rationals");
    RatVector v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(rational_at(j[i], where + "[" + std::to_string(i) + "]"));
    return v;
}

std::size_t count_at(const Json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long>() >= 0))
        schema(where, "expected a non-negative integer");
    return j.get<std::size_t>();
}

Metric metric_at(const Json& j, const std::string& where) {
    if (!j.is_string()) schema(where, "expected \"l1\" or \"linf\"");
    try {
        return parse_metric(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
        schema(where, e.what());
    }
}

Network network_at(const Json& j, const std::string& where) {
    const Json& layers = field(j, "layers", where);
    if (!layers.is_array() || layers.size() < 2) schema(where + ".layers", "expected the input layer and at least one more");
    if (!layers[0].is_array()) schema(where + ".layers[0]", "expected an array");
    std::size_t input_dim = layers[0].size();
    std::vector<Layer> out;
    for (std::size_t l = 1; l < layers.size(); ++l) {
        std::string lw = where + ".layers[" + std::to_string(l) + "]";
        if (!layers[l].is_array()) schema(lw, "expected an array of nodes");
        Layer layer;
        for (std::size_t i = 0; i < layers[l].size(); ++i) {
            std::string nw = lw + "[" + std::to_string(i) + "]";
            const Json& node = layers[l][i];
            const Json& act = field(node, "act", nw);
            Node n;
            if (act == "relu") n.act = Activation::ReLU;
            else if (act == "id") n.act = Activation::Id;
            else schema(nw + ".act", "expected \"relu\" or \"id\"");
            if (node.contains("bias")) n.bias = rational_at(node["bias"], nw + ".bias");
            if (node.contains("weights")) n.weights = vector_at(node["weights"], nw + ".weights");
            layer.push_back(std::move(n));
        }
        out.push_back(std::move(layer));
    }
    try {
        return Network(input_dim, std::move(out));
    } catch (const std::invalid_argument& e) {
        schema(where, e.what());
    }
}

LinSpec spec_at(const Json& j, const std::string& where) {
    LinSpec spec(count_at(field(j, "dim", where), where + ".dim"));
    const Json& rows = field(j, "rows", where);
    if (!rows.is_array()) schema(where + ".rows", "expected an array");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::string rw = where + ".rows[" + std::to_string(r) + "]";
        LinRow row;
        row.coeffs = vector_at(field(rows[r], "coeffs", rw), rw + ".coeffs");
        const Json& rel = field(rows[r], "rel", rw);
        if (!rel.is_string()) schema(rw + ".rel", "expected \"<=\", \"<\" or \"=\"");
        try {
            row.rel = parse_relation(rel.get<std::string>());
        } catch (const std::invalid_argument& e) {
            schema(rw + ".rel", e.what());
        }
        row.rhs = rational_at(field(rows[r], "rhs", rw), rw + ".rhs");
        if (row.coeffs.size() != spec.dim) schema(rw + ".coeffs", "length does not match dim");
        spec.rows.push_back(std::move(row));
    }
    return spec;
}

Json rat(const Rational& r) { return r.str(); }

Json stats_json(const SearchStats& s) {
    return {{"lp_count", s.lp_count}, {"patterns_explored", s.patterns_explored}, {"nodes_visited", s.nodes_visited}};
}

}  // namespace

Json to_json(std::span<const Rational> v) {
    Json a = Json::array();
    for (const auto& x : v) a.push_back(rat(x));
    return a;
}

RatVector vector_from_json(const Json& j) { return vector_at(j, "vector"); }

Json to_json(const Network& net) {
    Json layers = Json::array();
    layers.push_back(Json::array());
    for (std::size_t i = 0; i < net.input_dim(); ++i) layers[0].push_back(Json::object());
    for (const auto& layer : net.computation_layers()) {
        Json nodes = Json::array();
        for (const auto& node : layer)
            nodes.push_back({{"act", node.act == Activation::ReLU ? "relu" : "id"},
                             {"bias", rat(node.bias)},
                             {"weights", to_json(node.weights)}});
        layers.push_back(std::move(nodes));
    }
    return {{"layers", std::move(layers)}};
}

Network network_from_json(const Json& j) { return network_at(j, "net"); }

Json to_json(const LinSpec& spec) {
    Json rows = Json::array();
    for (const auto& row : spec.rows)
        rows.push_back({{"coeffs", to_json(row.coeffs)}, {"rel", relation_name(row.rel)}, {"rhs", rat(row.rhs)}});
    return {{"dim", spec.dim}, {"rows", std::move(rows)}};
}

LinSpec spec_from_json(const Json& j) { return spec_at(j, "spec"); }

Json to_json(const ProblemInstance& inst) {
    Json j;
    j["problem"] = std::string(problem_name(inst));
    auto ball = [&](const Network& net, Metric metric, const ExtRational& eps) {
        j["net"] = to_json(net);
        j["metric"] = std::string(metric_name(metric));
        j["eps"] = eps.str();
    };
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, NnrInstance> || std::is_same_v<T, VipInstance>) {
                j["net"] = to_json(p.net);
                j["inspec"] = to_json(p.inspec);
                j["outspec"] = to_json(p.outspec);
            } else if constexpr (std::is_same_v<T, NeInstance>) {
                j["net"] = to_json(p.net1);
                j["net2"] = to_json(p.net2);
            } else if constexpr (std::is_same_v<T, SrInstance>) {
                ball(p.net, p.metric, p.eps);
                j["delta"] = p.delta.str();
                j["center"] = to_json(p.center);
            } else if constexpr (std::is_same_v<T, CrInstance>) {
                ball(p.net, p.metric, p.eps);
                j["center"] = to_json(p.center);
                j["label"] = p.label;
                j["strict"] = p.strict_argmax;
            } else if constexpr (std::is_same_v<T, AcrInstance>) {
                ball(p.net, p.metric, p.eps);
                j["center"] = to_json(p.center);
                j["strict"] = p.strict_argmax;
            } else if constexpr (std::is_same_v<T, LrInstance>) {
                ball(p.net, p.metric, p.eps);
                j["lip"] = rat(p.lip);
                j["center"] = to_json(p.center);
            } else if constexpr (std::is_same_v<T, GsrInstance>) {
                ball(p.net, p.metric, p.eps);
                j["delta"] = p.delta.str();
            } else {
                ball(p.net, p.metric, p.eps);
                j["lip"] = rat(p.lip);
            }
        },
        inst);
    return j;
}

ProblemInstance instance_from_json(const Json& j) {
    const std::string w = "instance";
    const Json& problem = field(j, "problem", w);
    if (!problem.is_string()) schema(w + ".problem", "expected a problem name");
    const std::string name = problem.get<std::string>();
    auto net = [&](const char* key = "net") { return network_at(field(j, key, w), w + "." + key); };
    auto spec = [&](const char* key) { return spec_at(field(j, key, w), w + "." + key); };
    auto metric = [&] { return j.contains("metric") ? metric_at(j["metric"], w + ".metric") : Metric::Linf; };
    auto ext = [&](const char* key) { return ext_at(field(j, key, w), w + "." + key); };
    auto rational = [&](const char* key) { return rational_at(field(j, key, w), w + "." + key); };
    auto center = [&] { return vector_at(field(j, "center", w), w + ".center"); };
    auto strict = [&] {
        if (!j.contains("strict")) return false;
        if (!j["strict"].is_boolean()) schema(w + ".strict", "expected true or false");
        return j["strict"].get<bool>();
    };

    ProblemInstance inst;
    if (name == "nnr") inst = NnrInstance{net(), spec("inspec"), spec("outspec")};
    else if (name == "vip") inst = VipInstance{net(), spec("inspec"), spec("outspec")};
    else if (name == "ne") inst = NeInstance{net(), net("net2")};
    else if (name == "sr") inst = SrInstance{net(), metric(), ext("eps"), ext("delta"), center()};
    else if (name == "cr")
        inst = CrInstance{net(), metric(), ext("eps"), center(), count_at(field(j, "label", w), w + ".label"), strict()};
    else if (name == "acr") inst = AcrInstance{net(), metric(), ext("eps"), center(), strict()};
    else if (name == "lr") inst = LrInstance{net(), metric(), ext("eps"), rational("lip"), center()};
    else if (name == "gsr") inst = GsrInstance{net(), metric(), ext("eps"), ext("delta")};
    else if (name == "glr") inst = GlrInstance{net(), metric(), ext("eps"), rational("lip")};
    else schema(w + ".problem", "unknown problem '" + name + "'");
    try {
        validate(inst);
    } catch (const std::invalid_argument& e) {
        schema(w, e.what());
    }
    return inst;
}

Json to_json(const Certificate& cert) {
    return {{"pattern", to_string(cert.pattern)}, {"branch", cert.branch}, {"branch_label", cert.branch_label}};
}

Certificate certificate_from_json(const Json& j) {
    const std::string w = "certificate";
    Certificate cert;
    const Json& pattern = field(j, "pattern", w);
    if (!pattern.is_string()) schema(w + ".pattern", "expected a string of A/I letters");
    for (char c : pattern.get<std::string>()) {
        if (c == 'A') cert.pattern.push_back(Phase::Active);
        else if (c == 'I') cert.pattern.push_back(Phase::Inactive);
        else schema(w + ".pattern", std::string("unexpected letter '") + c + "'");
    }
    cert.branch = count_at(field(j, "branch", w), w + ".branch");
    if (j.contains("branch_label") && j["branch_label"].is_string()) cert.branch_label = j["branch_label"];
    return cert;
}

Json to_json(const Verdict& v) {
    Json j;
    j["holds"] = v.holds;
    j["witness"] = v.witness ? to_json(*v.witness) : Json(nullptr);
    j["certificate"] = v.certificate ? to_json(*v.certificate) : Json(nullptr);
    if (!v.label_witnesses.empty()) {
        Json lw = Json::array();
        for (const auto& w : v.label_witnesses) lw.push_back(to_json(w));
        j["label_witnesses"] = std::move(lw);
    }
    j["stats"] = stats_json(v.stats);
    return j;
}

Json to_json(const AneceResult& r) {
    Json unnecessary = Json::array();
    for (const auto& ref : r.unnecessary) unnecessary.push_back(to_string(ref));
    return {{"holds", r.holds},
            {"unnecessary", r.holds ? Json(nullptr) : unnecessary},
            {"subsets_checked", r.subsets_checked},
            {"stats", stats_json(r.stats)}};
}

Json to_json(const std::set<NodeRef>& nodes) {
    Json a = Json::array();
    for (const auto& ref : nodes) a.push_back(to_string(ref));
    return a;
}

std::set<NodeRef> nodes_from_json(const Json& j) {
    if (!j.is_array()) schema("nodes", "expected an array of \"layer:index\" strings");
    std::set<NodeRef> out;
    for (const auto& item : j) {
        if (!item.is_string()) schema("nodes", "expected \"layer:index\" strings");
        try {
            out.insert(parse_node_ref(item.get<std::string>()));
        } catch (const std::invalid_argument& e) {
            schema("nodes", e.what());
        }
    }
    return out;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace nnv
