#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace affect {

enum class Dimension : std::size_t { pleasure = 0, arousal = 1, dominance = 2 };

inline constexpr std::array<Dimension, 3> all_dimensions{Dimension::pleasure, Dimension::arousal,
                                                         Dimension::dominance};

// A point in pleasure/arousal/dominance space. Components live in [-1, 1];
// use clamp_pad() to build one from unchecked data.
struct PadVector {
    double pleasure = 0.0;
    double arousal = 0.0;
    double dominance = 0.0;

    double operator[](Dimension d) const noexcept
    {
        switch (d) {
        case Dimension::pleasure: return pleasure;
        case Dimension::arousal: return arousal;
        case Dimension::dominance: return dominance;
        }
        return 0.0;
    }
    double& operator[](Dimension d) noexcept
    {
        switch (d) {
        case Dimension::arousal: return arousal;
        case Dimension::dominance: return dominance;
        default: return pleasure;
        }
    }

    friend bool operator==(const PadVector&, const PadVector&) = default;
};

double distance(const PadVector& a, const PadVector& b) noexcept;

// Throws InvalidArgument on NaN/inf; otherwise clamps each axis into [-1, 1].
PadVector clamp_pad(double pleasure, double arousal, double dominance);

struct LabelPrototype {
    std::string label;
    PadVector prototype;

    friend bool operator==(const LabelPrototype&, const LabelPrototype&) = default;
};

// Ordered list of discrete labels with their PAD prototypes. Order matters:
// it breaks ties in pad_to_label().
class LabelPrototypeTable {
public:
    LabelPrototypeTable() = default;
    // Throws ConfigError on duplicate labels or out-of-range prototypes.
    explicit LabelPrototypeTable(std::vector<LabelPrototype> entries);

    const std::vector<LabelPrototype>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

    // Eight temperament octants at +/-0.5 per axis.
    static LabelPrototypeTable octants();

    friend bool operator==(const LabelPrototypeTable&, const LabelPrototypeTable&) = default;

private:
    std::vector<LabelPrototype> entries_;
};

struct LabelMatch {
    std::string label;
    double distance = 0.0;
};

// Nearest prototype by Euclidean distance; first entry wins on ties.
// Throws ConfigError for an empty table.
LabelMatch pad_to_label(const PadVector& p, const LabelPrototypeTable& table);

// Affine valence/arousal -> dominance mapping: c0 + c1*valence + c2*arousal.
struct DominanceRule {
    double c0 = 0.0;
    double c1 = 0.5;
    double c2 = 0.25;

    friend bool operator==(const DominanceRule&, const DominanceRule&) = default;
};

void validate(const DominanceRule& rule);

double va_to_dominance(double valence, double arousal, const DominanceRule& rule);

} // namespace affect
