#include "powerlines/serialize.hpp"

#include <fstream>

namespace powerlines {

using nlohmann::json;

json tau_law_to_json(const TauLaw& law) {
    json j;
    j["c_tau"] = law.law.coeff;
    j["m_tau"] = law.law.exponent;
    j["r_squared"] = law.law.r_squared;
    j["q10"] = law.law.has_quantiles ? json(law.law.exp_q10) : json(nullptr);
    j["q90"] = law.law.has_quantiles ? json(law.law.exp_q90) : json(nullptr);
    j["fit_points"] = json::array();
    for (const auto& p : law.fit_points)
        j["fit_points"].push_back({{"tpp", p.tpp},
                                   {"tau_opt", p.tau_opt},
                                   {"n_params", p.n_params},
                                   {"d_tokens", p.d_tokens}});
    return j;
}

TauLaw tau_law_from_json(const json& j) {
    TauLaw law;
    law.law.coeff = j.at("c_tau").get<double>();
    law.law.exponent = j.at("m_tau").get<double>();
    law.law.r_squared = j.value("r_squared", 0.0);
    if (j.contains("q10") && !j.at("q10").is_null()) {
        law.law.has_quantiles = true;
        law.law.exp_q10 = j.at("q10").get<double>();
        law.law.exp_q90 = j.at("q90").get<double>();
    }
    if (j.contains("fit_points")) {
        for (const auto& p : j.at("fit_points")) {
            TauPoint tp;
            tp.tpp = p.at("tpp").get<double>();
            tp.tau_opt = p.at("tau_opt").get<double>();
            tp.n_params = p.value("n_params", std::int64_t{0});
            tp.d_tokens = p.value("d_tokens", std::int64_t{0});
            law.fit_points.push_back(tp);
        }
    }
    law.law.n_points = static_cast<int>(law.fit_points.size());
    return law;
}

json batch_law_to_json(const BatchScalingLaw& law) {
    json j;
    j["kind"] = law.kind == BatchLawKind::BcritInDmin ? "bcrit-in-Dmin" : "bopt-in-D";
    j["coeff"] = law.law.coeff;
    j["exponent"] = law.law.exponent;
    j["r_squared"] = law.law.r_squared;
    j["q10"] = law.law.has_quantiles ? json(law.law.exp_q10) : json(nullptr);
    j["q90"] = law.law.has_quantiles ? json(law.law.exp_q90) : json(nullptr);
    j["units"] = law.units == BatchUnits::Sequences ? "sequences" : "tokens";
    j["seq_len"] = law.seq_len;
    return j;
}

BatchScalingLaw batch_law_from_json(const json& j) {
    BatchScalingLaw law;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bcrit-in-Dmin")
        law.kind = BatchLawKind::BcritInDmin;
    else if (kind == "bopt-in-D")
        law.kind = BatchLawKind::BoptInD;
    else
        throw Error("unknown batch law kind: " + kind);
    law.law.coeff = j.at("coeff").get<double>();
    law.law.exponent = j.at("exponent").get<double>();
    law.law.r_squared = j.value("r_squared", 0.0);
    if (j.contains("q10") && !j.at("q10").is_null()) {
        law.law.has_quantiles = true;
        law.law.exp_q10 = j.at("q10").get<double>();
        law.law.exp_q90 = j.at("q90").get<double>();
    }
    const std::string units = j.at("units").get<std::string>();
    if (units == "sequences")
        law.units = BatchUnits::Sequences;
    else if (units == "tokens")
        law.units = BatchUnits::Tokens;
    else
        throw Error("unknown batch units: " + units);
    law.seq_len = j.at("seq_len").get<std::int64_t>();
    return law;
}

json crit_point_to_json(const CritPoint& cp) {
    return json{{"loss_target", cp.loss_target},
                {"d_min", cp.d_min},
                {"s_min", cp.s_min},
                {"b_crit_tokens", cp.b_crit_tokens},
                {"b_crit_sequences", cp.b_crit_sequences},
                {"units", "sequences"},
                {"seq_len", cp.seq_len}};
}

CritPoint crit_point_from_json(const json& j) {
    CritPoint cp;
    cp.loss_target = j.at("loss_target").get<double>();
    cp.d_min = j.at("d_min").get<double>();
    cp.s_min = j.at("s_min").get<double>();
    cp.b_crit_tokens = j.at("b_crit_tokens").get<double>();
    cp.b_crit_sequences = j.at("b_crit_sequences").get<double>();
    cp.seq_len = j.at("seq_len").get<std::int64_t>();
    return cp;
}

json chinchilla_to_json(const ChinchillaFit& fit) {
    return json{{"irreducible", fit.irreducible}, {"n_const", fit.n_const},
                {"alpha", fit.alpha},             {"d_const", fit.d_const},
                {"beta", fit.beta},               {"r_squared", fit.r_squared}};
}

ChinchillaFit chinchilla_from_json(const json& j) {
    ChinchillaFit fit;
    fit.irreducible = j.at("irreducible").get<double>();
    fit.n_const = j.at("n_const").get<double>();
    fit.alpha = j.at("alpha").get<double>();
    fit.d_const = j.at("d_const").get<double>();
    fit.beta = j.at("beta").get<double>();
    fit.r_squared = j.value("r_squared", 0.0);
    return fit;
}

json world_to_json(const WorldSpec& world) {
    json j;
    j["chinchilla"] = chinchilla_to_json(world.chinchilla);
    j["crit_law"] = {{"coeff", world.c_crit},
                     {"exponent", world.m_crit},
                     {"units", "sequences"},
                     {"seq_len", world.seq_len}};
    j["tau_law"] = {{"c_tau", world.c_tau}, {"m_tau", world.m_tau}};
    j["mistune_curvature"] = world.mistune_curvature;
    j["noise_sigma"] = world.noise_sigma;
    j["seq_len"] = world.seq_len;
    j["seed"] = world.seed;
    return j;
}

WorldSpec world_from_json(const json& j) {
    WorldSpec world;
    world.chinchilla = chinchilla_from_json(j.at("chinchilla"));
    world.c_crit = j.at("crit_law").at("coeff").get<double>();
    world.m_crit = j.at("crit_law").at("exponent").get<double>();
    world.c_tau = j.at("tau_law").at("c_tau").get<double>();
    world.m_tau = j.at("tau_law").at("m_tau").get<double>();
    world.mistune_curvature = j.value("mistune_curvature", 0.01);
    world.noise_sigma = j.value("noise_sigma", 0.0);
    world.seq_len = j.value("seq_len", kDefaultSeqLen);
    world.seed = j.value("seed", std::uint64_t{0});
    validate_world(world);
    return world;
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(0, std::string(e.what()) + " in " + path.string());
    }
    return j;
}

void save_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace powerlines
