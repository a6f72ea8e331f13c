#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace cmcslab {

/// One eigenvalue of a separated spectral problem together with where it came
/// from: `mode` is the orbit harmonic degree j, `index` the longitudinal index k.
struct SpectrumEntry {
    double lambda = 0.0;
    int multiplicity = 1;
    int mode = 0;
    int index = 0;

    friend bool operator==(const SpectrumEntry&, const SpectrumEntry&) = default;
};

/// Ascending eigenvalues with multiplicities. Ties are ordered by (mode, index)
/// so that the ordering is deterministic.
class Spectrum {
public:
    Spectrum() = default;

    explicit Spectrum(std::vector<SpectrumEntry> entries) : entries_(std::move(entries))
    {
        for (const auto& e : entries_) {
            if (e.multiplicity < 1) {
                throw std::invalid_argument("Spectrum: multiplicity must be >= 1");
            }
        }
        std::stable_sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
            return std::tie(a.lambda, a.mode, a.index) < std::tie(b.lambda, b.mode, b.index);
        });
    }

    const std::vector<SpectrumEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    /// Number of eigenvalues counted with multiplicity.
    std::size_t total_count() const noexcept
    {
        std::size_t n = 0;
        for (const auto& e : entries_) {
            n += static_cast<std::size_t>(e.multiplicity);
        }
        return n;
    }

    /// i-th eigenvalue (0-based) counted with multiplicity.
    double eigenvalue(std::size_t i) const
    {
        for (const auto& e : entries_) {
            const auto m = static_cast<std::size_t>(e.multiplicity);
            if (i < m) {
                return e.lambda;
            }
            i -= m;
        }
        throw std::out_of_range("Spectrum::eigenvalue: index beyond computed spectrum");
    }

    /// First `count` eigenvalues with multiplicity expanded.
    std::vector<double> expanded(std::size_t count) const
    {
        std::vector<double> out;
        out.reserve(count);
        for (const auto& e : entries_) {
            for (int r = 0; r < e.multiplicity && out.size() < count; ++r) {
                out.push_back(e.lambda);
            }
            if (out.size() == count) {
                break;
            }
        }
        return out;
    }

    /// Smallest prefix whose total multiplicity reaches `count`.
    Spectrum truncated(std::size_t count) const
    {
        std::vector<SpectrumEntry> kept;
        std::size_t n = 0;
        for (const auto& e : entries_) {
            if (n >= count) {
                break;
            }
            kept.push_back(e);
            n += static_cast<std::size_t>(e.multiplicity);
        }
        Spectrum s;
        s.entries_ = std::move(kept);
        return s;
    }

private:
    std::vector<SpectrumEntry> entries_;
};

} // namespace cmcslab
