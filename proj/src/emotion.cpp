#include "affect/emotion.hpp"

#include "affect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace affect {

namespace {

bool in_unit_range(double v)
{
    return std::isfinite(v) && v >= -1.0 && v <= 1.0;
}

} // namespace

double distance(const PadVector& a, const PadVector& b) noexcept
{
    const double dp = a.pleasure - b.pleasure;
    const double da = a.arousal - b.arousal;
    const double dd = a.dominance - b.dominance;
    return std::sqrt(dp * dp + da * da + dd * dd);
}

PadVector clamp_pad(double pleasure, double arousal, double dominance)
{
    if (!std::isfinite(pleasure) || !std::isfinite(arousal) || !std::isfinite(dominance))
        throw InvalidArgument("PAD component is not finite");
    return PadVector{std::clamp(pleasure, -1.0, 1.0), std::clamp(arousal, -1.0, 1.0),
                     std::clamp(dominance, -1.0, 1.0)};
}

LabelPrototypeTable::LabelPrototypeTable(std::vector<LabelPrototype> entries)
    : entries_(std::move(entries))
{
    std::set<std::string> seen;
    for (const auto& e : entries_) {
        if (e.label.empty())
            throw ConfigError("label prototype with empty label");
        if (!seen.insert(e.label).second)
            throw ConfigError("duplicate label prototype '" + e.label + "'");
        const auto& p = e.prototype;
        if (!in_unit_range(p.pleasure) || !in_unit_range(p.arousal) || !in_unit_range(p.dominance))
            throw ConfigError("prototype for '" + e.label + "' is outside [-1, 1]");
    }
}

LabelPrototypeTable LabelPrototypeTable::octants()
{
    constexpr double m = 0.5;
    return LabelPrototypeTable({
        {"exuberant", {m, m, m}},
        {"bored", {-m, -m, -m}},
        {"dependent", {m, m, -m}},
        {"disdainful", {-m, -m, m}},
        {"relaxed", {m, -m, m}},
        {"anxious", {-m, m, -m}},
        {"docile", {m, -m, -m}},
        {"hostile", {-m, m, m}},
    });
}

LabelMatch pad_to_label(const PadVector& p, const LabelPrototypeTable& table)
{
    if (table.empty())
        throw ConfigError("label prototype table is empty");
    const LabelPrototype* best = nullptr;
    double best_distance = 0.0;
    for (const auto& entry : table.entries()) {
        const double d = distance(p, entry.prototype);
        // strict comparison keeps the earliest entry on ties
        if (best == nullptr || d < best_distance) {
            best = &entry;
            best_distance = d;
        }
    }
    return LabelMatch{best->label, best_distance};
}

void validate(const DominanceRule& rule)
{
    if (!std::isfinite(rule.c0) || !std::isfinite(rule.c1) || !std::isfinite(rule.c2))
        throw ConfigError("dominance rule coefficients must be finite");
}

double va_to_dominance(double valence, double arousal, const DominanceRule& rule)
{
    if (!in_unit_range(valence) || !in_unit_range(arousal))
        throw InvalidArgument("valence/arousal outside [-1, 1]");
    return std::clamp(rule.c0 + rule.c1 * valence + rule.c2 * arousal, -1.0, 1.0);
}

} // namespace affect
