#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "membrane/flow.hpp"

namespace membrane {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_bytes(std::vector<std::uint8_t>& buf, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  buf.insert(buf.end(), b, b + n);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(raw[sizeof(T) - 1 - i]);
  } else {
    put_bytes(buf, &v, sizeof(T));
  }
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw IoError("checkpoint: truncated file");
  T v;
  if constexpr (std::endian::native == std::endian::big) {
    std::uint8_t raw[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) raw[i] = buf[pos + sizeof(T) - 1 - i];
    std::memcpy(&v, raw, sizeof(T));
  } else {
    std::memcpy(&v, buf.data() + pos, sizeof(T));
  }
  pos += sizeof(T);
  return v;
}

inline std::uint64_t fnv1a(const std::uint8_t* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void format_g17(char* out, std::size_t n, double v) { std::snprintf(out, n, "%.17g", v); }

inline std::string g17(double v) {
  char buf[32];
  format_g17(buf, sizeof(buf), v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// checkpoint: fixed little-endian binary layout with magic, version and an
// FNV-1a content checksum; restart is bit-exact on the same platform.

inline constexpr char checkpoint_magic[8] = {'M', 'E', 'M', 'B', 'C', 'K', 'P', '1'};

struct Checkpoint {
  ModelParams params;
  int l_max = 0;
  double oversample = 2.0;
  double t = 0.0;
  double lambda = 0.0;
  double dt = 0.0;
  std::uint64_t step_count = 0;
  std::vector<double> phi_coeff;
};

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  std::vector<std::uint8_t> buf;
  buf.reserve(160 + 8 * c.phi_coeff.size());
  detail::put_bytes(buf, checkpoint_magic, 8);
  detail::put_le<std::uint32_t>(buf, 1u);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(c.l_max));
  detail::put_le<double>(buf, c.oversample);
  for (double v : {c.params.kappa, c.params.sigma, c.params.Lambda, c.params.b,
                   c.params.epsilon, c.params.beta, c.params.alpha, c.params.R})
    detail::put_le<double>(buf, v);
  detail::put_le<double>(buf, c.t);
  detail::put_le<double>(buf, c.lambda);
  detail::put_le<double>(buf, c.dt);
  detail::put_le<std::uint64_t>(buf, c.step_count);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(c.phi_coeff.size()));
  for (double v : c.phi_coeff) detail::put_le<double>(buf, v);
  detail::put_le<std::uint64_t>(buf, detail::fnv1a(buf.data(), buf.size()));
  return buf;
}

inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& buf) {
  if (buf.size() < 16 || std::memcmp(buf.data(), checkpoint_magic, 8) != 0)
    throw IoError("checkpoint: bad magic");
  const std::uint64_t recomputed = detail::fnv1a(buf.data(), buf.size() - 8);
  std::size_t tail = buf.size() - 8;
  const std::uint64_t expect = detail::get_le<std::uint64_t>(buf, tail);
  if (recomputed != expect) throw IoError("checkpoint: checksum mismatch");

  std::size_t pos = 8;
  const auto version = detail::get_le<std::uint32_t>(buf, pos);
  if (version != 1) throw IoError("checkpoint: unsupported version");
  Checkpoint c;
  c.l_max = static_cast<int>(detail::get_le<std::uint32_t>(buf, pos));
  c.oversample = detail::get_le<double>(buf, pos);
  c.params.kappa = detail::get_le<double>(buf, pos);
  c.params.sigma = detail::get_le<double>(buf, pos);
  c.params.Lambda = detail::get_le<double>(buf, pos);
  c.params.b = detail::get_le<double>(buf, pos);
  c.params.epsilon = detail::get_le<double>(buf, pos);
  c.params.beta = detail::get_le<double>(buf, pos);
  c.params.alpha = detail::get_le<double>(buf, pos);
  c.params.R = detail::get_le<double>(buf, pos);
  c.t = detail::get_le<double>(buf, pos);
  c.lambda = detail::get_le<double>(buf, pos);
  c.dt = detail::get_le<double>(buf, pos);
  c.step_count = detail::get_le<std::uint64_t>(buf, pos);
  const auto n = detail::get_le<std::uint32_t>(buf, pos);
  c.phi_coeff.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) c.phi_coeff[i] = detail::get_le<double>(buf, pos);
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const FlowState& state,
                            const ModelParams& p) {
  Checkpoint c;
  c.params = p;
  c.l_max = state.phi.grid->l_max();
  c.oversample = state.phi.grid->oversample();
  c.t = state.t;
  c.lambda = state.lambda;
  c.dt = state.dt;
  c.step_count = static_cast<std::uint64_t>(state.step_count);
  c.phi_coeff = state.phi.coeff;
  const auto buf = encode_checkpoint(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("checkpoint: write failed for " + path.string());
}

struct LoadedCheckpoint {
  FlowState state;
  ModelParams params;
};

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  Checkpoint c = decode_checkpoint(buf);
  auto grid = build_grid(c.params.R, c.l_max, c.oversample);
  if (c.phi_coeff.size() != static_cast<std::size_t>(grid->n_coeff()))
    throw IoError("checkpoint: coefficient count does not match the grid");
  SpectralField phi(grid);
  phi.coeff = std::move(c.phi_coeff);
  LoadedCheckpoint out{make_state(std::move(phi), c.params, c.dt, c.t), c.params};
  out.state.step_count = static_cast<long>(c.step_count);
  return out;
}

// ---------------------------------------------------------------------------
// CSV and snapshots

inline std::string params_comment_block(const ModelParams& p, const GridPtr& grid) {
  std::string s;
  s += "# model.kappa = " + detail::g17(p.kappa) + " [energy]\n";
  s += "# model.sigma = " + detail::g17(p.sigma) + " [energy/area]\n";
  s += "# model.Lambda = " + detail::g17(p.Lambda) + " [1/length]\n";
  s += "# model.b = " + detail::g17(p.b) + " [energy/length]\n";
  s += "# model.epsilon = " + detail::g17(p.epsilon) + " [length]\n";
  s += "# model.beta = " + detail::g17(p.beta) + " [energy time/length^3]\n";
  s += "# model.alpha = " + detail::g17(p.alpha) + " [-]\n";
  s += "# model.R = " + detail::g17(p.R) + " [length]\n";
  if (grid) {
    s += "# grid.l_max = " + std::to_string(grid->l_max()) + "\n";
    s += "# grid.oversample = " + detail::g17(grid->oversample()) + "\n";
    s += "# grid.n_theta = " + std::to_string(grid->n_theta()) + "\n";
    s += "# grid.n_phi = " + std::to_string(grid->n_phi()) + "\n";
  }
  return s;
}

inline void write_diagnostics_csv(const std::filesystem::path& path,
                                  const FlowDiagnostics& diag, const ModelParams& p,
                                  const GridPtr& grid) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("diagnostics: cannot open " + path.string());
  out << "# membrane relax diagnostics\n" << params_comment_block(p, grid);
  out << "t[time],E_reduced[energy],J_eps[energy],K[energy],mass[-],"
         "lambda[energy/area],rhs_norm[1/time],dt[time]\n";
  for (const auto& r : diag.rows) {
    out << detail::g17(r.t) << ',' << detail::g17(r.e_reduced) << ',' << detail::g17(r.j_eps)
        << ',' << detail::g17(r.k) << ',' << detail::g17(r.mass) << ',' << detail::g17(r.lambda)
        << ',' << detail::g17(r.rhs_norm) << ',' << detail::g17(r.dt) << '\n';
  }
  if (!out) throw IoError("diagnostics: write failed");
}

/// Plain-text lat-lon matrix (one latitude per row).
inline void write_field_txt(const std::filesystem::path& path, const GridField& f,
                            const std::string& name, double t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("snapshot: cannot open " + path.string());
  const auto& g = *f.grid;
  out << "# membrane snapshot field=" << name << " t=" << detail::g17(t) << "\n";
  out << "# n_theta=" << g.n_theta() << " n_phi=" << g.n_phi() << "\n";
  out << "# colatitudes:";
  for (double th : g.colatitudes()) out << ' ' << detail::g17(th);
  out << "\n";
  for (int j = 0; j < g.n_theta(); ++j) {
    for (int k = 0; k < g.n_phi(); ++k) {
      if (k) out << ' ';
      out << detail::g17(f.at(j, k));
    }
    out << '\n';
  }
}

/// Legacy-VTK structured grid carrying phi and u for standard viewers.
inline void write_snapshot_vtk(const std::filesystem::path& path, const GridField& phi,
                               const GridField& u, double t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("snapshot: cannot open " + path.string());
  const auto& g = *phi.grid;
  const int nt = g.n_theta(), np = g.n_phi();
  out << "# vtk DataFile Version 3.0\n";
  out << "membrane state t=" << detail::g17(t) << "\n";
  out << "ASCII\nDATASET STRUCTURED_GRID\n";
  out << "DIMENSIONS " << np + 1 << ' ' << nt << " 1\n";
  out << "POINTS " << (np + 1) * nt << " double\n";
  for (int j = 0; j < nt; ++j) {
    const double st = g.sin_theta()[j], ct = g.cos_theta()[j];
    for (int k = 0; k <= np; ++k) {
      const double ph = g.longitude(k % np);
      out << detail::g17(g.radius() * st * std::cos(ph)) << ' '
          << detail::g17(g.radius() * st * std::sin(ph)) << ' '
          << detail::g17(g.radius() * ct) << '\n';
    }
  }
  out << "POINT_DATA " << (np + 1) * nt << "\n";
  out << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
  for (int j = 0; j < nt; ++j)
    for (int k = 0; k <= np; ++k) out << detail::g17(phi.at(j, k % np)) << '\n';
  out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
  for (int j = 0; j < nt; ++j)
    for (int k = 0; k <= np; ++k) out << detail::g17(u.at(j, k % np)) << '\n';
}

}  // namespace membrane
