#include "honet/tableau.hpp"

#include <cmath>
#include <cstring>

#include "honet/rng.hpp"
#include "json.hpp"

namespace honet {

Scheme scheme_from_string(const std::string& s) {
    if (s == "euler") return Scheme::euler;
    if (s == "midpoint") return Scheme::midpoint;
    if (s == "rk4") return Scheme::rk4;
    if (s == "verner") return Scheme::verner;
    if (s == "verner-canonical") return Scheme::verner_canonical;
    std::string valid;
    for (const auto& n : scheme_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw config_error("unknown scheme '" + s + "' (valid: " + valid + ")");
}

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::euler: return "euler";
        case Scheme::midpoint: return "midpoint";
        case Scheme::rk4: return "rk4";
        case Scheme::verner: return "verner";
        case Scheme::verner_canonical: return "verner-canonical";
    }
    return "?";
}

std::vector<std::string> scheme_names() {
    return {"euler", "midpoint", "rk4", "verner", "verner-canonical"};
}

std::vector<double> Tableau::abscissae() const {
    std::vector<double> c(stages, 0.0);
    for (std::size_t i = 0; i < stages; ++i)
        for (const auto& t : stage_rules[i]) c[i] += t.coef;
    return c;
}

double Tableau::output_weight_sum() const {
    double s = 0.0;
    for (const auto& t : output_rule) s += t.coef;
    return s;
}

bool Tableau::strictly_explicit() const {
    for (std::size_t i = 0; i < stages; ++i)
        for (const auto& t : stage_rules[i])
            if (t.source < 0 || t.source >= static_cast<int>(i)) return false;
    for (const auto& t : output_rule)
        if (t.source < 0 || t.source >= static_cast<int>(stages)) return false;
    return true;
}

bool Tableau::chain_only() const {
    for (std::size_t i = 0; i < stages; ++i)
        for (const auto& t : stage_rules[i])
            if (t.source != static_cast<int>(i) - 1) return false;
    return true;
}

std::uint64_t Tableau::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed_terms = [&h](const std::vector<StageTerm>& terms) {
        for (const auto& t : terms) {
            h = fnv1a64(&t.source, sizeof t.source, h);
            h = fnv1a64(&t.coef, sizeof t.coef, h);
        }
    };
    h = fnv1a64(name.data(), name.size(), h);
    for (const auto& row : stage_rules) feed_terms(row);
    feed_terms(output_rule);
    return h;
}

std::string Tableau::to_json_string() const {
    nlohmann::json j;
    j["name"] = name;
    j["stages"] = stages;
    j["layers_per_block"] = layers_per_block();
    switch (default_h_policy) {
        case HPolicy::none: j["h_policy"] = "none"; break;
        case HPolicy::fixed_one: j["h_policy"] = "fixed(1)"; break;
        case HPolicy::learnable: j["h_policy"] = "learnable"; break;
    }
    auto terms_json = [](const std::vector<StageTerm>& terms) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& t : terms)
            arr.push_back({{"source", "k" + std::to_string(t.source + 1)}, {"coef", t.coef}});
        return arr;
    };
    nlohmann::json rules = nlohmann::json::array();
    for (std::size_t i = 0; i < stages; ++i)
        rules.push_back({{"stage", "k" + std::to_string(i + 1)},
                         {"input", "x"},
                         {"terms", terms_json(stage_rules[i])}});
    j["stage_rules"] = rules;
    j["output_rule"] = {{"base", "x"}, {"terms", terms_json(output_rule)}};
    j["output_weight_sum"] = output_weight_sum();
    j["abscissae"] = abscissae();
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest()));
    j["digest"] = buf;
    return j.dump(2);
}

namespace {

Tableau make_euler() {
    Tableau t;
    t.name = "euler";
    t.stages = 1;
    t.stage_rules = {{}};
    t.output_rule = {{0, 1.0}};
    return t;
}

Tableau make_midpoint() {
    Tableau t;
    t.name = "midpoint";
    t.stages = 2;
    t.stage_rules = {{}, {{0, 0.5}}};
    t.output_rule = {{1, 1.0}};
    return t;
}

Tableau make_rk4() {
    Tableau t;
    t.name = "rk4";
    t.stages = 4;
    t.stage_rules = {{}, {{0, 0.5}}, {{1, 0.5}}, {{2, 1.0}}};
    t.output_rule = {{0, 1.0 / 6.0}, {1, 2.0 / 6.0}, {2, 2.0 / 6.0}, {3, 1.0 / 6.0}};
    return t;
}

// Verner 8(9), transcribed as printed: stages 2-11 in exact form with
// sqrt(6), stages 12-14 and the output weights as rounded decimals. k15/k16
// belong to the error estimator and are not part of the block output, so
// the table stops at 14 stages.
Tableau make_verner_printed() {
    const double s6 = std::sqrt(6.0);
    Tableau t;
    t.name = "verner";
    t.stages = 14;
    t.default_h_policy = HPolicy::fixed_one;
    t.stage_rules.resize(14);
    auto& a = t.stage_rules;
    // k2 = F( h/12 k1 + x )
    a[1] = {{0, 1.0 / 12.0}};
    // k3 = F( h/27 (k1 + 2 k2) + x )
    a[2] = {{0, 1.0 / 27.0}, {1, 2.0 / 27.0}};
    // k4 = F( h/24 (k1 + 3 k3) + x )
    a[3] = {{0, 1.0 / 24.0}, {2, 3.0 / 24.0}};
    // k5 = F( h/375 ((4+94*s6) k1 - (282+252*s6) k3 + (328+206*s6) k4) + x )
    a[4] = {{0, (4.0 + 94.0 * s6) / 375.0},
            {2, -(282.0 + 252.0 * s6) / 375.0},
            {3, (328.0 + 206.0 * s6) / 375.0}};
    // k6 = F( h ((9-s6)/150 k1 + (312+32*s6)/1425 k4 + (69+29*s6)/570 k5) + x )
    a[5] = {{0, (9.0 - s6) / 150.0}, {3, (312.0 + 32.0 * s6) / 1425.0}, {4, (69.0 + 29.0 * s6) / 570.0}};
    // k7 = F( h ((927-347*s6)/1250 k1 + (7328*s6-16248)/9375 k4
    //            + (179*s6-489)/3750 k5 + (14268-5798*s6)/9375 k6) + x )
    a[6] = {{0, (927.0 - 347.0 * s6) / 1250.0},
            {3, (7328.0 * s6 - 16248.0) / 9375.0},
            {4, (179.0 * s6 - 489.0) / 3750.0},
            {5, (14268.0 - 5798.0 * s6) / 9375.0}};
    // k8 = F( h/54 (4 k1 + (16-s6) k6 + (16+s6) k7) + x )
    a[7] = {{0, 4.0 / 54.0}, {5, (16.0 - s6) / 54.0}, {6, (16.0 + s6) / 54.0}};
    // k9 = F( h/512 (38 k1 + (118-23*s6) k6 + (118+23*s6) k7 - 18 k8) + x )
    a[8] = {{0, 38.0 / 512.0},
            {5, (118.0 - 23.0 * s6) / 512.0},
            {6, (118.0 + 23.0 * s6) / 512.0},
            {7, -18.0 / 512.0}};
    // k10 = F( h (11/144 k1 + (266-s6)/864 k6 + (266+s6)/864 k7 - 1/16 k8 - 8/27 k9) + x )
    a[9] = {{0, 11.0 / 144.0},
            {5, (266.0 - s6) / 864.0},
            {6, (266.0 + s6) / 864.0},
            {7, -1.0 / 16.0},
            {8, -8.0 / 27.0}};
    // k11 = F( h ((5034-271*s6)/61440 k1 + (7859-1626*s6)/10240 k7 + (813*s6-2232)/20480 k8
    //             + (271*s6-594)/960 k9 + (657-813*s6)/5120 k10) + x )
    a[10] = {{0, (5034.0 - 271.0 * s6) / 61440.0},
             {6, (7859.0 - 1626.0 * s6) / 10240.0},
             {7, (813.0 * s6 - 2232.0) / 20480.0},
             {8, (271.0 * s6 - 594.0) / 960.0},
             {9, (657.0 - 813.0 * s6) / 5120.0}};
    // k12..k14 as printed (decimals)
    a[11] = {{0, -8.14164}, {5, -574.436}, {6, 847.88}, {7, 113.719},
             {8, 626.94},   {9, 605.73},   {10, -328.69}};
    a[12] = {{0, 0.0878}, {5, 0.69337}, {6, -1.9},  {7, 0.23},
             {8, -0.69},  {9, -0.077},  {10, 2.49}, {11, 0.0018}};
    a[13] = {{0, -0.1},  {5, 5.575}, {6, 7.486},  {7, -6.23},   {8, 2.27},
             {9, -4.89}, {10, -4.86}, {11, -0.0235}, {12, 1.78}};
    // out = x + h (0.06 k1 - 0.19 k8 + 0.72 k9 - 0.72 k10 + 0.75 k11
    //              + 0.0004 k12 + 0.34 k13 + 0.032 k14)
    t.output_rule = {{0, 0.06}, {7, -0.19}, {8, 0.72},  {9, -0.72},
                     {10, 0.75}, {11, 0.0004}, {12, 0.34}, {13, 0.032}};
    return t;
}

// High-precision canonical alternative for order studies: the Cooper-Verner
// 11-stage 8th-order method, exact closed forms in sqrt(21). Order 8 was
// verified against b^T A^k 1 = 1/(k+1)! for k <= 7.
Tableau make_verner_canonical() {
    const double s = std::sqrt(21.0);
    Tableau t;
    t.name = "verner-canonical";
    t.stages = 11;
    t.default_h_policy = HPolicy::fixed_one;
    t.stage_rules.resize(11);
    auto& a = t.stage_rules;
    a[1] = {{0, 0.5}};
    a[2] = {{0, 0.25}, {1, 0.25}};
    a[3] = {{0, 1.0 / 7.0}, {1, -(7.0 + 3.0 * s) / 98.0}, {2, (21.0 + 5.0 * s) / 49.0}};
    a[4] = {{0, (11.0 + s) / 84.0}, {2, (18.0 + 4.0 * s) / 63.0}, {3, (21.0 - s) / 252.0}};
    a[5] = {{0, (5.0 + s) / 48.0},
            {2, (9.0 + s) / 36.0},
            {3, (-231.0 + 14.0 * s) / 360.0},
            {4, (63.0 - 7.0 * s) / 80.0}};
    a[6] = {{0, (10.0 - s) / 42.0},
            {2, (-432.0 + 92.0 * s) / 315.0},
            {3, (633.0 - 145.0 * s) / 90.0},
            {4, (-504.0 + 115.0 * s) / 70.0},
            {5, (63.0 - 13.0 * s) / 35.0}};
    a[7] = {{0, 1.0 / 14.0}, {4, (14.0 - 3.0 * s) / 126.0}, {5, (13.0 - 3.0 * s) / 63.0}, {6, 1.0 / 9.0}};
    a[8] = {{0, 1.0 / 32.0},
            {4, (91.0 - 21.0 * s) / 576.0},
            {5, 11.0 / 72.0},
            {6, -(385.0 + 75.0 * s) / 1152.0},
            {7, (63.0 + 13.0 * s) / 128.0}};
    a[9] = {{0, 1.0 / 14.0},
            {4, 1.0 / 9.0},
            {5, -(733.0 + 147.0 * s) / 2205.0},
            {6, (515.0 + 111.0 * s) / 504.0},
            {7, -(51.0 + 11.0 * s) / 56.0},
            {8, (132.0 + 28.0 * s) / 245.0}};
    a[10] = {{4, (-42.0 + 7.0 * s) / 18.0},
             {5, (-18.0 + 28.0 * s) / 45.0},
             {6, -(273.0 + 53.0 * s) / 72.0},
             {7, (301.0 + 53.0 * s) / 72.0},
             {8, (28.0 - 28.0 * s) / 45.0},
             {9, (49.0 - 7.0 * s) / 18.0}};
    t.output_rule = {{0, 1.0 / 20.0}, {7, 49.0 / 180.0}, {8, 16.0 / 45.0},
                     {9, 49.0 / 180.0}, {10, 1.0 / 20.0}};
    return t;
}

}  // namespace

Tableau make_tableau(Scheme s) {
    switch (s) {
        case Scheme::euler: return make_euler();
        case Scheme::midpoint: return make_midpoint();
        case Scheme::rk4: return make_rk4();
        case Scheme::verner: return make_verner_printed();
        case Scheme::verner_canonical: return make_verner_canonical();
    }
    throw config_error("make_tableau: bad scheme");
}

std::vector<StageTerm> lite_output_rule(const Tableau& t) {
    return {{static_cast<int>(t.stages) - 1, 1.0}};
}

int retained_shortcuts(const Tableau& t, bool lite) {
    // Retention convention. Non-chain wiring (a stage referencing anything
    // besides its predecessor) pins every k plus the input for the whole
    // block. Chain schemes with a multi-term blend keep each blended k until
    // the output, except the final one which is consumed immediately. A
    // single-output chain longer than two stages double-buffers the running
    // state next to the input.
    if (!t.chain_only()) return static_cast<int>(t.stages) + 1;
    const std::size_t out_refs = lite ? 1 : t.output_rule.size();
    if (out_refs > 1) return static_cast<int>(out_refs);
    return t.stages > 2 ? 2 : 1;
}

}  // namespace honet
