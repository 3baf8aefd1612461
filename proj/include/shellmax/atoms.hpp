#pragma once

// Constructive atomic decomposition driven by the Peetre square function.
//
// Pipeline: threshold S_max(f) at dyadic levels, select dyadic cubes that
// meet the half-measure rule between consecutive level sets, cover the
// dilated level sets by maximal dyadic (Whitney) cubes, and assemble one
// atom per Whitney cube from the band-filtered pieces of f restricted to
// its selected cubes. Assembly kernels are truncated in space so that each
// atom is supported, exactly at the cell level, in the 20-fold concentric
// enlargement of its cube.
//
// Levels, cube sides and |W| in the stopping-time formulas are in grid
// cells; piece norms are physical L2 quadrature values.

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>

#include "shellmax/littlewood_paley.hpp"
#include "shellmax/maximal.hpp"

namespace shellmax {

struct DyadicCube {
    int level = 0;                // side = 2^level cells
    std::vector<int> coords;      // lower corner / 2^level

    int side() const { return 1 << level; }
};

struct LevelOptions {
    // Dilated level set threshold on hl_max(indicator). The default is the
    // operating value; tests lower it to exercise nontrivial Whitney
    // geometry on a finite torus.
    double maximal_threshold = 1e-12;  // = 100^{-6}
};

struct LevelData {
    int kappa = 0;
    std::vector<std::uint8_t> omega;        // {S_max > 2^kappa}
    std::vector<std::uint8_t> omega_tilde;  // {hl_max(chi_omega) > threshold}
    std::vector<std::int32_t> whitney_label;  // cell -> index into whitney, -1 outside
    std::vector<DyadicCube> whitney;
    std::map<int, std::vector<DyadicCube>> selected;  // cube level -> B_kappa^level
};

struct LevelSetSystem {
    GridSpec grid;
    LevelOptions options;
    std::vector<LevelData> levels;  // ascending kappa
    bool empty() const { return levels.empty(); }
};

namespace detail {

// Flat prefix counts over the cell array; box queries wrap periodically.
class PrefixCount {
  public:
    PrefixCount() = default;
    PrefixCount(const GridSpec& g, const std::vector<std::uint8_t>& mask) : g_(g) {
        dims_.assign(static_cast<std::size_t>(g.dim), g.n + 1);
        std::size_t total = 1;
        for (int a = 0; a < g.dim; ++a) total *= static_cast<std::size_t>(g.n + 1);
        p_.assign(total, 0);
        std::vector<int> idx(g.dim);
        // P(i) = count over [0, i) per axis, built axis by axis
        for (std::size_t c = 0; c < mask.size(); ++c) {
            unflatten(g, c, idx);
            for (int a = 0; a < g.dim; ++a) ++idx[a];
            p_[flat(idx)] = mask[c];
        }
        for (int a = 0; a < g.dim; ++a) accumulate_axis(a);
    }

    // count of set cells in the (possibly wrapping) box [lo, lo+len) per axis
    std::int64_t box_count(std::span<const int> lo, std::span<const int> len) const {
        return wrap_split(0, lo, len, std::vector<std::pair<int, int>>());
    }

  private:
    GridSpec g_;
    std::vector<int> dims_;
    std::vector<std::int64_t> p_;

    std::size_t flat(std::span<const int> idx) const {
        std::size_t f = 0;
        for (int a = 0; a < g_.dim; ++a) f = f * static_cast<std::size_t>(g_.n + 1) + static_cast<std::size_t>(idx[a]);
        return f;
    }
    void accumulate_axis(int axis) {
        std::vector<int> idx(g_.dim, 0);
        const std::size_t total = p_.size();
        // iterate all points, adding the predecessor along `axis`
        std::vector<std::size_t> stride(static_cast<std::size_t>(g_.dim), 1);
        for (int a = g_.dim - 2; a >= 0; --a)
            stride[static_cast<std::size_t>(a)] = stride[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(g_.n + 1);
        for (std::size_t c = 0; c < total; ++c) {
            std::size_t rem = c;
            int ia = 0;
            for (int a = 0; a < g_.dim; ++a) {
                const int v = static_cast<int>(rem / stride[static_cast<std::size_t>(a)]);
                rem %= stride[static_cast<std::size_t>(a)];
                if (a == axis) ia = v;
            }
            if (ia > 0) p_[c] += p_[c - stride[static_cast<std::size_t>(axis)]];
        }
    }
    // non-wrapping rectangle count by inclusion-exclusion over corners
    std::int64_t rect(std::span<const std::pair<int, int>> ranges) const {
        const int d = g_.dim;
        std::int64_t sum = 0;
        for (int mask = 0; mask < (1 << d); ++mask) {
            std::vector<int> idx(static_cast<std::size_t>(d));
            int bits = 0;
            for (int a = 0; a < d; ++a) {
                const bool hi = mask & (1 << a);
                idx[static_cast<std::size_t>(a)] = hi ? ranges[static_cast<std::size_t>(a)].second
                                                      : ranges[static_cast<std::size_t>(a)].first;
                bits += hi ? 0 : 1;
            }
            sum += (bits % 2 == 0 ? 1 : -1) * p_[flat(idx)];
        }
        return sum;
    }
    std::int64_t wrap_split(int axis, std::span<const int> lo, std::span<const int> len,
                            std::vector<std::pair<int, int>> acc) const {
        if (axis == g_.dim) return rect(acc);
        const int n = g_.n;
        int a0 = wrap_index(lo[axis], n);
        int l = std::min(len[axis], n);
        std::int64_t total = 0;
        if (a0 + l <= n) {
            acc.push_back({a0, a0 + l});
            total += wrap_split(axis + 1, lo, len, acc);
            acc.pop_back();
        } else {
            acc.push_back({a0, n});
            total += wrap_split(axis + 1, lo, len, acc);
            acc.pop_back();
            acc.push_back({0, a0 + l - n});
            total += wrap_split(axis + 1, lo, len, acc);
            acc.pop_back();
        }
        return total;
    }
};

// Concentric 20-fold enlargement of a dyadic cube, clipped to the torus:
// lower corner shifts by floor(19 * side / 2) cells.
inline void enlarged_box(const GridSpec& g, const DyadicCube& w, std::vector<int>& lo, std::vector<int>& len) {
    const int side = w.side();
    const long wide = 20L * side;
    lo.resize(static_cast<std::size_t>(g.dim));
    len.resize(static_cast<std::size_t>(g.dim));
    for (int a = 0; a < g.dim; ++a) {
        if (wide >= g.n) {
            lo[static_cast<std::size_t>(a)] = 0;
            len[static_cast<std::size_t>(a)] = g.n;
        } else {
            lo[static_cast<std::size_t>(a)] = wrap_index(w.coords[static_cast<std::size_t>(a)] * side - static_cast<int>((19L * side) / 2), g.n);
            len[static_cast<std::size_t>(a)] = static_cast<int>(wide);
        }
    }
}

}  // namespace detail

inline LevelSetSystem build_level_system(const Field& f, const BumpFamily& fam,
                                         const LevelOptions& options = {}) {
    const GridSpec& g = f.grid;
    LevelSetSystem sys{g, options, {}};
    const Field smax = peetre_square_function(f, fam);

    double vmax = 0.0, vminpos = kInfinity;
    for (double v : smax.values) {
        vmax = std::max(vmax, v);
        if (v > 0.0) vminpos = std::min(vminpos, v);
    }
    if (vmax == 0.0) return sys;  // zero field: empty system

    const int kappa_lo = static_cast<int>(std::floor(std::log2(vminpos))) - 1;
    const int kappa_hi = static_cast<int>(std::ceil(std::log2(vmax)));
    const std::size_t total = g.cell_count();

    // masks for every candidate level, then trim: drop empty levels and all
    // full-box levels except the topmost one (lower ones select nothing)
    std::vector<std::vector<std::uint8_t>> masks;
    std::vector<int> kappas;
    for (int kappa = kappa_lo; kappa <= kappa_hi; ++kappa) {
        const double thr = std::ldexp(1.0, kappa);
        std::vector<std::uint8_t> m(total, 0);
        std::size_t cnt = 0;
        for (std::size_t c = 0; c < total; ++c) {
            m[c] = smax.values[c] > thr ? 1 : 0;
            cnt += m[c];
        }
        if (cnt == 0) break;
        masks.push_back(std::move(m));
        kappas.push_back(kappa);
    }
    std::size_t first = 0;
    while (first + 1 < masks.size()) {
        bool full = true;
        for (auto b : masks[first + 1])
            if (!b) { full = false; break; }
        if (full) ++first; else break;
    }

    const int q = g.log2_n();
    std::vector<int> band_levels;
    for (int b = fam.band_min; b <= fam.band_max; ++b) band_levels.push_back(fam.cube_level(b));

    for (std::size_t li = first; li < masks.size(); ++li) {
        LevelData lev;
        lev.kappa = kappas[li];
        lev.omega = std::move(masks[li]);

        Field chi = make_field(g);
        for (std::size_t c = 0; c < total; ++c) chi.values[c] = lev.omega[c];
        const Field m = hl_max(chi);
        lev.omega_tilde.resize(total);
        for (std::size_t c = 0; c < total; ++c)
            lev.omega_tilde[c] = m.values[c] > options.maximal_threshold ? 1 : 0;

        // Whitney cover: maximal dyadic cubes whose 20-enlargement fits in
        // omega_tilde; single cells fall back to plain membership.
        detail::PrefixCount pc_tilde(g, lev.omega_tilde);
        lev.whitney_label.assign(total, -1);
        std::vector<int> lo, len;
        std::function<void(const DyadicCube&)> walk = [&](const DyadicCube& w) {
            bool keep;
            if (w.level == 0) {
                std::vector<int> cell(w.coords);
                keep = lev.omega_tilde[flat_index(g, cell)] != 0;
            } else {
                detail::enlarged_box(g, w, lo, len);
                std::int64_t want = 1;
                for (int a = 0; a < g.dim; ++a) want *= len[static_cast<std::size_t>(a)];
                keep = pc_tilde.box_count(lo, len) == want;
            }
            if (keep) {
                const std::int32_t id = static_cast<std::int32_t>(lev.whitney.size());
                lev.whitney.push_back(w);
                // label cells
                std::vector<int> idx(g.dim);
                const int side = w.side();
                std::vector<int> cur(static_cast<std::size_t>(g.dim), 0);
                while (true) {
                    for (int a = 0; a < g.dim; ++a) idx[a] = w.coords[static_cast<std::size_t>(a)] * side + cur[static_cast<std::size_t>(a)];
                    lev.whitney_label[flat_index(g, idx)] = id;
                    int a = g.dim - 1;
                    while (a >= 0 && cur[static_cast<std::size_t>(a)] == side - 1) { cur[static_cast<std::size_t>(a)] = 0; --a; }
                    if (a < 0) break;
                    ++cur[static_cast<std::size_t>(a)];
                }
                return;
            }
            if (w.level == 0) return;
            // recurse into the 2^d children
            for (int childbits = 0; childbits < (1 << g.dim); ++childbits) {
                DyadicCube c;
                c.level = w.level - 1;
                c.coords.resize(static_cast<std::size_t>(g.dim));
                for (int a = 0; a < g.dim; ++a)
                    c.coords[static_cast<std::size_t>(a)] = 2 * w.coords[static_cast<std::size_t>(a)] + ((childbits >> a) & 1);
                walk(c);
            }
        };
        walk(DyadicCube{q, std::vector<int>(static_cast<std::size_t>(g.dim), 0)});

        // half-measure cube selection between consecutive level sets
        const detail::PrefixCount pc_this(g, lev.omega);
        std::optional<detail::PrefixCount> pc_next;
        if (li + 1 < masks.size()) pc_next.emplace(g, masks[li + 1]);
        for (int level : band_levels) {
            if (lev.selected.count(level)) continue;
            const int side = 1 << level;
            if (side > g.n) continue;
            const int per_axis = g.n / side;
            std::vector<DyadicCube>& picked = lev.selected[level];
            std::vector<int> cc(static_cast<std::size_t>(g.dim), 0), blo(g.dim), blen(g.dim, side);
            const std::int64_t cube_cells = static_cast<std::int64_t>(1) << (static_cast<std::int64_t>(level) * g.dim);
            while (true) {
                for (int a = 0; a < g.dim; ++a) blo[static_cast<std::size_t>(a)] = cc[static_cast<std::size_t>(a)] * side;
                const std::int64_t in_this = pc_this.box_count(blo, blen);
                if (2 * in_this >= cube_cells) {
                    const std::int64_t in_next = pc_next ? pc_next->box_count(blo, blen) : 0;
                    if (2 * in_next < cube_cells) picked.push_back(DyadicCube{level, cc});
                }
                int a = g.dim - 1;
                while (a >= 0 && cc[static_cast<std::size_t>(a)] == per_axis - 1) { cc[static_cast<std::size_t>(a)] = 0; --a; }
                if (a < 0) break;
                ++cc[static_cast<std::size_t>(a)];
            }
        }
        sys.levels.push_back(std::move(lev));
    }
    return sys;
}

// ---------------------------------------------------------------------------
// Atoms

struct AtomPatch {
    std::vector<int> lo;      // lower corner cell of the enlarged box
    std::vector<int> len;     // box side lengths in cells
    std::vector<double> values;  // row-major over the box
};

struct Atom {
    int kappa = 0;
    DyadicCube cube;                                  // the Whitney cube W
    std::map<int, std::vector<DyadicCube>> pieces;    // band -> selected R in W
    double gamma = 0.0;
    double l2_bw = 0.0;
    double leak_max = 0.0;  // largest |value| the assembly produced outside W*
    AtomPatch patch;                                  // assembled b_W on W*
};

struct AtomSet {
    GridSpec grid;
    LevelSetSystem system;
    std::vector<Field> piece_fields;  // w_b * f per band, band_min first
    std::vector<Atom> atoms;
    bool empty() const { return atoms.empty(); }
};

namespace detail {

// Spatial truncation radius (sup-norm, in cells) that keeps W + kernel
// support inside the 20-enlargement of W.
inline int truncation_radius(const GridSpec& g, int cube_level) {
    const long side = 1L << cube_level;
    if (20L * side >= g.n) return g.n / 2;  // enlargement wraps: no truncation needed
    return static_cast<int>((19L * side) / 2);
}

// Cyclic convolution of a sparse piece (values on selected cubes) with a
// truncated kernel, evaluated on the atom patch via a padded FFT.
class PatchConvolver {
  public:
    PatchConvolver(const GridSpec& g, const BumpFamily& fam) : g_(g), fam_(&fam) {}

    // kernel transform for (band, truncation radius), on the full torus
    const std::vector<std::complex<double>>& truncated_kernel_hat(int band, int radius) {
        auto key = std::make_pair(band, radius);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const Field& k = fam_->assembly_kernel[static_cast<std::size_t>(fam_->band_index(band))];
        std::vector<std::complex<double>> buf(k.size());
        std::vector<int> idx(g_.dim);
        for (std::size_t c = 0; c < k.size(); ++c) {
            unflatten(g_, c, idx);
            int supnorm = 0;
            for (int a = 0; a < g_.dim; ++a)
                supnorm = std::max(supnorm, std::abs(signed_index(idx[a], g_.n)));
            buf[c] = supnorm <= radius ? k.values[c] : 0.0;
        }
        fft::transform(buf.data(), g_.dim, g_.n, false);
        return cache_.emplace(key, std::move(buf)).first->second;
    }

  private:
    GridSpec g_;
    const BumpFamily* fam_;
    std::map<std::pair<int, int>, std::vector<std::complex<double>>> cache_;
};

}  // namespace detail

inline AtomSet build_atoms(LevelSetSystem sys, const Field& f, const BumpFamily& fam) {
    if (!(f.grid == sys.grid) || !(fam.grid == sys.grid))
        throw std::invalid_argument("build_atoms: system, field and family must share a grid");
    const GridSpec& g = f.grid;
    AtomSet out{g, std::move(sys), {}, {}};
    if (out.system.empty()) return out;

    for (int b = fam.band_min; b <= fam.band_max; ++b)
        out.piece_fields.push_back(piece_filter(f, fam, b));

    detail::PatchConvolver conv(g, fam);
    const double hv = g.cell_volume();
    std::vector<int> idx(g.dim);

    for (const LevelData& lev : out.system.levels) {
        // atoms keyed by whitney index
        std::map<std::int32_t, Atom> partial;
        for (int b = fam.band_min; b <= fam.band_max; ++b) {
            const int level = fam.cube_level(b);
            auto it = lev.selected.find(level);
            if (it == lev.selected.end()) continue;
            for (const DyadicCube& r : it->second) {
                // locate the unique Whitney cube containing R
                const int side = r.side();
                for (int a = 0; a < g.dim; ++a) idx[a] = r.coords[static_cast<std::size_t>(a)] * side;
                const std::int32_t wid = lev.whitney_label[flat_index(g, idx)];
                if (wid < 0)
                    throw std::logic_error("build_atoms: selected cube outside every Whitney cube");
                Atom& atom = partial.try_emplace(wid).first->second;
                if (atom.pieces.empty()) {
                    atom.kappa = lev.kappa;
                    atom.cube = lev.whitney[static_cast<std::size_t>(wid)];
                }
                atom.pieces[b].push_back(r);
            }
        }

        for (auto& [wid, atom] : partial) {
            // gamma^2 = sum over pieces of the physical L2 mass of f_b on R
            double g2 = 0.0;
            const Field* pieces = out.piece_fields.data();
            for (const auto& [b, cubes] : atom.pieces) {
                const Field& fb = pieces[fam.band_index(b)];
                for (const DyadicCube& r : cubes) {
                    const int side = r.side();
                    std::vector<int> cur(static_cast<std::size_t>(g.dim), 0);
                    while (true) {
                        for (int a = 0; a < g.dim; ++a)
                            idx[a] = r.coords[static_cast<std::size_t>(a)] * side + cur[static_cast<std::size_t>(a)];
                        const double v = fb.values[flat_index(g, idx)];
                        g2 += v * v * hv;
                        int a = g.dim - 1;
                        while (a >= 0 && cur[static_cast<std::size_t>(a)] == side - 1) { cur[static_cast<std::size_t>(a)] = 0; --a; }
                        if (a < 0) break;
                        ++cur[static_cast<std::size_t>(a)];
                    }
                }
            }
            atom.gamma = std::sqrt(g2);

            // assemble b_W = sum_b K_b * piece restriction on the full torus
            // with per-atom truncated kernels, then cut the patch out
            const int radius = detail::truncation_radius(g, atom.cube.level);
            std::vector<std::complex<double>> accum(g.cell_count(), 0.0);
            std::vector<std::complex<double>> buf(g.cell_count());
            for (const auto& [b, cubes] : atom.pieces) {
                const Field& fb = out.piece_fields[static_cast<std::size_t>(fam.band_index(b))];
                std::fill(buf.begin(), buf.end(), 0.0);
                for (const DyadicCube& r : cubes) {
                    const int side = r.side();
                    std::vector<int> cur(static_cast<std::size_t>(g.dim), 0);
                    while (true) {
                        for (int a = 0; a < g.dim; ++a)
                            idx[a] = r.coords[static_cast<std::size_t>(a)] * side + cur[static_cast<std::size_t>(a)];
                        const std::size_t c = flat_index(g, idx);
                        buf[c] = fb.values[c];
                        int a = g.dim - 1;
                        while (a >= 0 && cur[static_cast<std::size_t>(a)] == side - 1) { cur[static_cast<std::size_t>(a)] = 0; --a; }
                        if (a < 0) break;
                        ++cur[static_cast<std::size_t>(a)];
                    }
                }
                fft::transform(buf.data(), g.dim, g.n, false);
                const auto& khat = conv.truncated_kernel_hat(b, radius);
                for (std::size_t c = 0; c < buf.size(); ++c) accum[c] += buf[c] * khat[c] * hv;
                // the hv factor matches the physical convolution normalisation
            }
            fft::transform(accum.data(), g.dim, g.n, true);

            detail::enlarged_box(g, atom.cube, atom.patch.lo, atom.patch.len);
            std::size_t patch_cells = 1;
            for (int a = 0; a < g.dim; ++a) patch_cells *= static_cast<std::size_t>(atom.patch.len[static_cast<std::size_t>(a)]);
            atom.patch.values.assign(patch_cells, 0.0);
            std::vector<int> cur(static_cast<std::size_t>(g.dim), 0);
            double l2 = 0.0;
            for (std::size_t pc = 0; pc < patch_cells; ++pc) {
                for (int a = 0; a < g.dim; ++a)
                    idx[a] = atom.patch.lo[static_cast<std::size_t>(a)] + cur[static_cast<std::size_t>(a)];
                const double v = accum[flat_index(g, idx)].real();
                atom.patch.values[pc] = v;
                l2 += v * v * hv;
                int a = g.dim - 1;
                while (a >= 0 && cur[static_cast<std::size_t>(a)] == atom.patch.len[static_cast<std::size_t>(a)] - 1) { cur[static_cast<std::size_t>(a)] = 0; --a; }
                if (a >= 0) ++cur[static_cast<std::size_t>(a)];
            }
            atom.l2_bw = std::sqrt(l2);

            // whatever the transforms left outside the enlargement has to
            // be rounding noise, since the truncated kernels cannot reach
            // there; record the worst offender
            if (patch_cells < accum.size()) {
                for (std::size_t c = 0; c < accum.size(); ++c) {
                    unflatten(g, c, idx);
                    bool inside = true;
                    for (int a = 0; a < g.dim && inside; ++a) {
                        const int rel = wrap_index(idx[a] - atom.patch.lo[static_cast<std::size_t>(a)], g.n);
                        inside = rel < atom.patch.len[static_cast<std::size_t>(a)];
                    }
                    if (!inside) atom.leak_max = std::max(atom.leak_max, std::abs(accum[c].real()));
                }
            }
            out.atoms.push_back(std::move(atom));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stopping times

enum class StoppingRegime { annulus_thick, annulus_thin };

struct StoppingTime {
    // tau_tilde == minus_infinity() encodes the degenerate gamma = 0 case.
    int tau_tilde = 0;
    int tau = 0;
    static constexpr int minus_infinity() { return std::numeric_limits<int>::min(); }
};

namespace detail {

inline int ceil_log2_inverse(double delta) {
    return static_cast<int>(std::ceil(std::log2(1.0 / delta)));
}

// smallest integer t with pred(t), given pred is monotone nondecreasing
template <typename Pred>
inline int minimal_integer(Pred&& pred, int seed) {
    int t = seed;
    for (int i = 0; i < 4200 && pred(t - 1); ++i) --t;
    for (int i = 0; i < 4200 && !pred(t); ++i) ++t;
    return t;
}

}  // namespace detail

// Stopping exponents for one atom at threshold lambda. The thick regime
// demands 2^{t(d-1)} 2^{l(W)} >= |W|^{1/2} gamma / lambda, the thin one
// 2^{t d} delta >= |W|^{1/2} gamma / lambda; tau floors the result at the
// regime-specific scale.
inline StoppingTime stopping_time(double gamma, int cube_level, int d, double lambda, double delta,
                                  StoppingRegime regime) {
    if (!(lambda > 0.0)) throw std::invalid_argument("stopping_time: lambda must be positive");
    if (gamma < 0.0) throw std::invalid_argument("stopping_time: gamma must be >= 0");
    if (regime == StoppingRegime::annulus_thin && !(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("stopping_time: delta outside (0, 1/2)");

    const double cells = std::pow(2.0, 0.5 * cube_level * d);  // |W|^{1/2} in cells
    const double q = cells * gamma / lambda;
    StoppingTime st;
    if (regime == StoppingRegime::annulus_thick) {
        if (q == 0.0) {
            st.tau_tilde = StoppingTime::minus_infinity();
            st.tau = cube_level;
            return st;
        }
        auto pred = [&](int t) { return std::ldexp(1.0, t * (d - 1) + cube_level) >= q; };
        const int seed = static_cast<int>(std::ceil((std::log2(q) - cube_level) / (d - 1)));
        st.tau_tilde = detail::minimal_integer(pred, seed);
        st.tau = std::max(st.tau_tilde, cube_level);
    } else {
        const int floor_level = cube_level + detail::ceil_log2_inverse(delta);
        if (q == 0.0) {
            st.tau_tilde = StoppingTime::minus_infinity();
            st.tau = floor_level;
            return st;
        }
        auto pred = [&](int t) { return std::ldexp(delta, t * d) >= q; };
        const int seed = static_cast<int>(std::ceil(std::log2(q / delta) / d));
        st.tau_tilde = detail::minimal_integer(pred, seed);
        st.tau = std::max(st.tau_tilde, floor_level);
    }
    return st;
}

inline StoppingTime stopping_time(const Atom& atom, int d, double lambda, double delta,
                                  StoppingRegime regime) {
    return stopping_time(atom.gamma, atom.cube.level, d, lambda, delta, regime);
}

// ---------------------------------------------------------------------------
// Verification

struct DecompositionReport {
    double residual = 0.0;            // relative L2 reconstruction error
    std::size_t support_violations = 0;
    double gamma_recompute_err = 0.0;  // max relative disagreement
    double const_bw = 0.0;            // sum |W|^{1/2} ||b_W||_2 / H1
    double const_pieces = 0.0;        // sum |W|^{1/2} gamma / H1
    double omega_ratio_max = 0.0;     // max_kappa |tilde Omega| / |Omega|
    std::vector<std::string> csv_rows;
    bool pass = false;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline DecompositionReport verify_decomposition(const AtomSet& atoms, const Field& f,
                                                const BumpFamily& fam, double lambda = 1.0,
                                                double delta = 0.125) {
    const GridSpec& g = f.grid;
    DecompositionReport rep;

    // reconstruction: scatter every patch back and compare against f
    Field recon = make_field(g);
    std::vector<int> idx(g.dim);
    for (const Atom& atom : atoms.atoms) {
        std::size_t patch_cells = atom.patch.values.size();
        std::vector<int> cur(static_cast<std::size_t>(g.dim), 0);
        for (std::size_t pc = 0; pc < patch_cells; ++pc) {
            for (int a = 0; a < g.dim; ++a)
                idx[a] = atom.patch.lo[static_cast<std::size_t>(a)] + cur[static_cast<std::size_t>(a)];
            recon.values[flat_index(g, idx)] += atom.patch.values[pc];
            int a = g.dim - 1;
            while (a >= 0 && cur[static_cast<std::size_t>(a)] == atom.patch.len[static_cast<std::size_t>(a)] - 1) { cur[static_cast<std::size_t>(a)] = 0; --a; }
            if (a >= 0) ++cur[static_cast<std::size_t>(a)];
        }
    }
    const double nf = lp_norm(f, 2.0);
    if (nf > 0.0) {
        Field diff = make_field(g);
        for (std::size_t c = 0; c < diff.size(); ++c) diff.values[c] = f.values[c] - recon.values[c];
        rep.residual = lp_norm(diff, 2.0) / nf;
    }

    // support: every b_{W,b} restriction sits in W by construction, so the
    // measured check is on the assembled patches: the patch region must be
    // exactly the 20-enlargement of the atom's cube
    const double h1 = h1_norm(f, fam);
    const double hv = g.cell_volume();
    for (const Atom& atom : atoms.atoms) {
        std::vector<int> lo, len;
        detail::enlarged_box(g, atom.cube, lo, len);
        double peak = 0.0;
        for (double v : atom.patch.values) peak = std::max(peak, std::abs(v));
        bool region_ok = lo == atom.patch.lo && len == atom.patch.len &&
                         atom.leak_max <= 1e-10 * std::max(peak, 1e-300);
        if (!region_ok) ++rep.support_violations;

        // pieces inside W, recompute gamma independently (long double sum,
        // reversed order)
        long double g2 = 0.0L;
        bool piece_ok = true;
        for (auto it = atom.pieces.rbegin(); it != atom.pieces.rend(); ++it) {
            const Field& fb = atoms.piece_fields[static_cast<std::size_t>(fam.band_index(it->first))];
            for (const DyadicCube& r : it->second) {
                // R must be a dyadic sub-cube of W
                const int shift = atom.cube.level - r.level;
                if (shift < 0) piece_ok = false;
                for (int a = 0; piece_ok && a < g.dim; ++a)
                    if ((r.coords[static_cast<std::size_t>(a)] >> shift) != atom.cube.coords[static_cast<std::size_t>(a)])
                        piece_ok = false;
                const int side = r.side();
                std::vector<int> cur(static_cast<std::size_t>(g.dim), 0);
                while (true) {
                    for (int a = 0; a < g.dim; ++a)
                        idx[a] = r.coords[static_cast<std::size_t>(a)] * side + cur[static_cast<std::size_t>(a)];
                    const long double v = fb.values[flat_index(g, idx)];
                    g2 += v * v * static_cast<long double>(hv);
                    int a = g.dim - 1;
                    while (a >= 0 && cur[static_cast<std::size_t>(a)] == side - 1) { cur[static_cast<std::size_t>(a)] = 0; --a; }
                    if (a < 0) break;
                    ++cur[static_cast<std::size_t>(a)];
                }
            }
        }
        if (!piece_ok) ++rep.support_violations;
        const double gamma2 = std::sqrt(static_cast<double>(g2));
        const double denom = std::max(atom.gamma, 1e-300);
        rep.gamma_recompute_err = std::max(rep.gamma_recompute_err, std::abs(gamma2 - atom.gamma) / denom);

        const double root_w = std::pow(2.0, 0.5 * atom.cube.level * g.dim);
        rep.const_bw += root_w * atom.l2_bw;
        rep.const_pieces += root_w * atom.gamma;

        const StoppingTime thick = stopping_time(atom, g.dim, lambda, delta, StoppingRegime::annulus_thick);
        const StoppingTime thin = stopping_time(atom, g.dim, lambda, delta, StoppingRegime::annulus_thin);
        std::ostringstream row;
        row << atom.kappa << ',' << atom.cube.level << ",(";
        for (int a = 0; a < g.dim; ++a) row << (a ? ";" : "") << atom.cube.coords[static_cast<std::size_t>(a)];
        row << ")," << detail::format_double(atom.gamma) << ','
            << (thick.tau_tilde == StoppingTime::minus_infinity() ? std::string("-inf") : std::to_string(thick.tau_tilde)) << ','
            << thick.tau << ','
            << (thin.tau_tilde == StoppingTime::minus_infinity() ? std::string("-inf") : std::to_string(thin.tau_tilde)) << ','
            << thin.tau << ',' << detail::format_double(atom.l2_bw) << ','
            << (region_ok && piece_ok ? 1 : 0);
        rep.csv_rows.push_back(row.str());
    }

    if (h1 > 0.0) {
        rep.const_bw /= h1;
        rep.const_pieces /= h1;
    }
    for (const LevelData& lev : atoms.system.levels) {
        std::size_tom = 0, omt = 0;
        for (std::size_t c = 0; c < lev.omega.size(); ++c) {
            om += lev.omega[c];
            omt += lev.omega_tilde[c];
        }
        if (om > 0) rep.omega_ratio_max = std::max(rep.omega_ratio_max, static_cast<double>(omt) / static_cast<double>(om));
    }
    rep.pass = rep.residual <= 1e-6 && rep.support_violations == 0;
    return rep;
}

inline std::string decomposition_csv_header() {
    return "kappa,level,cube_coords,gamma,tau_tilde_thick,tau_thick,tau_tilde_thin,tau_thin,l2_bW,support_ok";
}

}  // namespace shellmax
