#pragma once

/**
 * @file report.hpp
 * @brief Verification report: per-estimate verdicts with empirical constants,
 *        margins, thresholds and refinement-stability flags, serialized as a
 *        versioned JSON document.
 */

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "forchlab/estimates.hpp"
#include "forchlab/io.hpp"
#include "forchlab/poincare.hpp"

namespace forchlab {

struct VerificationReport {
    nlohmann::json constants = nlohmann::json::object();
    nlohmann::json settings = nlohmann::json::object();
    std::vector<nlohmann::json> entries;
    int pass = 0, fail = 0, inconclusive = 0;

    void add_constants(const EstimateConstants& cst, const PoincareEstimate* cp = nullptr) {
        constants["a"] = cst.a;
        constants["cp_used"] = cst.cp_used;
        constants["d1"] = cst.d1();
        constants["d2"] = cst.d2();
        constants["d3"] = cst.d3;
        constants["d4"] = cst.d4;
        constants["kappa0"] = cst.kappa0();
        constants["holder_chat"] = cst.holder_chat;
        if (cp) {
            constants["cp_empirical"] = cp->cp_empirical;
            constants["cp_formula"] = cp->cp_formula;
            constants["sobolev_c"] = cp->sobolev_c;
            constants["q"] = cp->q;
            constants["r"] = cp->r;
            constants["safety_factor"] = cp->safety_factor;
            nlohmann::json sweep = nlohmann::json::array();
            for (const auto& [q, v] : cp->q_sweep) sweep.push_back({{"q", q}, {"cp", v}});
            constants["q_sweep"] = sweep;
        }
    }

    void add(const EstimateCheck& c, const std::string& anchor_prefix = "estimate") {
        nlohmann::json e;
        e["name"] = c.name;
        e["anchor"] = anchor_prefix + "/" + c.name;
        e["status"] = to_string(c.verdict);
        if (!std::isnan(c.c_hat)) e["c_hat"] = c.c_hat;
        if (!std::isnan(c.margin)) e["margin"] = c.margin;
        if (!std::isnan(c.first_violation)) e["first_violation_time"] = c.first_violation;
        if (!std::isnan(c.discovered_T)) e["threshold_T"] = c.discovered_T;
        if (c.refinement_checked) {
            e["refinement_stable"] = c.refinement_stable;
            e["c_hat_refined"] = c.c_hat_refined;
        }
        if (!c.note.empty()) e["note"] = c.note;
        entries.push_back(e);
        count(c.verdict);
    }

    void add(const LemmaOutcome& c, const std::string& anchor_prefix = "lemma") {
        nlohmann::json e;
        e["name"] = c.name;
        e["anchor"] = anchor_prefix + "/" + c.name;
        e["status"] = to_string(c.verdict);
        if (!std::isnan(c.discovered_T)) e["threshold_T"] = c.discovered_T;
        e["beta"] = c.beta;
        e["worst_margin"] = c.worst_margin;
        if (!c.note.empty()) e["note"] = c.note;
        entries.push_back(e);
        count(c.verdict);
    }

    void count(Verdict v) {
        if (v == Verdict::PASS) ++pass;
        else if (v == Verdict::FAIL) ++fail;
        else ++inconclusive;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema_version"] = kSchemaVersion;
        j["constants"] = constants;
        j["settings"] = settings;
        j["entries"] = entries;
        j["summary"] = {{"pass", pass}, {"fail", fail}, {"inconclusive", inconclusive}};
        return j;
    }

    std::string digest() const {
        std::string out;
        out += "verification report: " + std::to_string(pass) + " pass, " +
               std::to_string(fail) + " fail, " + std::to_string(inconclusive) +
               " inconclusive\n";
        for (const auto& e : entries) {
            out += "  [" + e.at("status").get<std::string>() + "] " +
                   e.at("name").get<std::string>();
            if (e.contains("c_hat"))
                out += "  c_hat=" + format_double(e.at("c_hat").get<double>());
            if (e.contains("margin"))
                out += "  margin=" + format_double(e.at("margin").get<double>());
            if (e.contains("threshold_T"))
                out += "  T=" + format_double(e.at("threshold_T").get<double>());
            if (e.contains("refinement_stable"))
                out += e.at("refinement_stable").get<bool>() ? "  refine:stable"
                                                             : "  refine:UNSTABLE";
            if (e.contains("note")) out += "  (" + e.at("note").get<std::string>() + ")";
            out += "\n";
        }
        return out;
    }
};

}  // namespace forchlab
