#pragma once

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <thread>

#include "membrane/config.hpp"
#include "membrane/io.hpp"
#include "membrane/sharp_energy.hpp"

namespace membrane {

namespace detail {

/// Bounded parallel map over an index range; results land in order, so the
/// output is independent of the worker count. Each worker owns its outputs.
template <typename Fn>
auto parallel_map(std::size_t n, Fn&& fn, int thread_cap)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(n);
  int workers = thread_cap > 0 ? thread_cap
                               : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// initial data from a run configuration

struct PreparedRun {
  GridPtr grid;
  ModelParams params;
  SpectralField phi0;
  double t0 = 0.0;
  long step0 = 0;
  double dt0 = 0.0;
};

inline PreparedRun prepare_run(const RunConfig& rc) {
  PreparedRun pr;
  if (rc.initial.kind == InitialSpec::Kind::checkpoint ||
      (rc.initial.kind == InitialSpec::Kind::perturbed &&
       rc.initial.base == InitialSpec::Kind::checkpoint)) {
    LoadedCheckpoint lc = load_checkpoint(rc.initial.checkpoint_path);
    pr.grid = lc.state.phi.grid;
    pr.params = lc.params;
    pr.phi0 = lc.state.phi;
    pr.t0 = lc.state.t;
    pr.step0 = lc.state.step_count;
    pr.dt0 = lc.state.dt;
  } else {
    pr.grid = build_grid(rc.model.R, rc.l_max, rc.oversample);
    pr.params = rc.model;
    const InitialSpec::Kind kind =
        rc.initial.kind == InitialSpec::Kind::perturbed ? rc.initial.base : rc.initial.kind;
    SpectralField raw(pr.grid);
    switch (kind) {
      case InitialSpec::Kind::constant:
        raw = initial_constant(pr.grid, rc.model.alpha);
        break;
      case InitialSpec::Kind::tanh_cap: {
        CapSet cs{{Cap{rc.initial.pole, rc.initial.theta0}}};
        raw = tanh_capset_profile(pr.grid, cs, rc.model.epsilon);
        break;
      }
      case InitialSpec::Kind::tanh_band:
        raw = tanh_band_profile(pr.grid, rc.initial.theta1, rc.initial.theta2,
                                rc.model.epsilon);
        break;
      default:
        throw ConfigError("config: unsupported initial.type combination");
    }
    // mean handling: explicit model.alpha wins, otherwise the profile's own
    // mean becomes the conserved composition
    if (rc.alpha_explicit || kind == InitialSpec::Kind::constant) {
      set_mean(raw, rc.model.alpha);
      pr.params.alpha = rc.model.alpha;
    } else {
      pr.params.alpha = mean(raw);
    }
    pr.phi0 = std::move(raw);
  }
  if (rc.initial.kind == InitialSpec::Kind::perturbed)
    add_perturbation(pr.phi0, rc.initial.amplitude, rc.initial.seed, rc.initial.max_degree,
                     pr.params.alpha);
  pr.params.validate();
  return pr;
}

// ---------------------------------------------------------------------------
// relax

struct RelaxArtifacts {
  FlowResult result;
  ModelParams params;
  std::filesystem::path diagnostics_csv;
  std::filesystem::path checkpoint;
  std::filesystem::path summary_json;
  double wall_seconds = 0.0;
};

inline RelaxArtifacts run_relax(const RunConfig& rc) {
  const auto t_start = std::chrono::steady_clock::now();
  PreparedRun pr = prepare_run(rc);
  std::filesystem::create_directories(rc.outputs.dir);

  FlowParams fp = rc.flow;
  if (pr.dt0 > 0.0) fp.dt = std::clamp(pr.dt0, fp.dt_min, fp.dt_max);

  auto snapshot_fn = [&](const FlowState& s) {
    if (!rc.outputs.write_txt && !rc.outputs.write_vtk) return;
    char tag[32];
    std::snprintf(tag, sizeof(tag), "%06ld", s.step_count);
    if (rc.outputs.write_txt) {
      write_field_txt(rc.outputs.dir / (std::string("snapshot_phi_") + tag + ".txt"),
                      synthesize(s.phi), "phi", s.t);
      write_field_txt(rc.outputs.dir / (std::string("snapshot_u_") + tag + ".txt"),
                      synthesize(s.u), "u", s.t);
    }
    if (rc.outputs.write_vtk)
      write_snapshot_vtk(rc.outputs.dir / (std::string("snapshot_") + tag + ".vtk"),
                         synthesize(s.phi), synthesize(s.u), s.t);
  };

  RelaxArtifacts art;
  art.params = pr.params;
  art.result = run_flow(pr.phi0, pr.params, fp,
                        rc.outputs.snapshot_every > 0 ? snapshot_fn
                                                      : std::function<void(const FlowState&)>{});
  // continuation bookkeeping for checkpoint restarts
  art.result.state.t += pr.t0;
  art.result.state.step_count += pr.step0;
  for (auto& row : art.result.diagnostics.rows) row.t += pr.t0;

  art.diagnostics_csv = rc.outputs.dir / "diagnostics.csv";
  write_diagnostics_csv(art.diagnostics_csv, art.result.diagnostics, pr.params, pr.grid);
  art.checkpoint = rc.outputs.dir / "final.ckpt";
  save_checkpoint(art.checkpoint, art.result.state, pr.params);

  const auto [r1, r2] = el_residuals(art.result.state, pr.params);
  art.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  nlohmann::json j;
  j["status"] = to_string(art.result.status);
  j["steps"] = art.result.state.step_count;
  j["t_final"] = art.result.state.t;
  j["energy"] = {{"reduced", art.result.state.energy()},
                 {"J_eps", art.result.state.energy_J},
                 {"K", art.result.state.energy_K}};
  j["lambda"] = art.result.state.lambda;
  j["el_residuals"] = {{"r1", r1}, {"r2", r2}};
  j["mass"] = mean(art.result.state.phi);
  j["wall_seconds"] = art.wall_seconds;
  art.summary_json = rc.outputs.dir / "summary.json";
  std::ofstream out(art.summary_json);
  out << j.dump(2) << "\n";
  return art;
}

// ---------------------------------------------------------------------------
// gamma study

struct GammaRow {
  double eps = 0.0;
  double j_eps = 0.0, k_phi = 0.0, e_reduced = 0.0;
  double j0_target = 0.0, k_chi = 0.0, e_si = 0.0;
  double err_j = 0.0, err_e = 0.0;
  double rate_j = 0.0, rate_e = 0.0;  // vs previous row, 0 on the first
};

struct GammaStudy {
  std::vector<GammaRow> rows;
  CapSet capset;
};

inline GammaStudy run_gamma_study(const RunConfig& rc) {
  GammaStudy study;
  study.capset = capset_from_config(rc);
  std::vector<double> eps = rc.eps_list;
  if (eps.empty()) eps = {0.1 * rc.model.R, 0.05 * rc.model.R};
  for (std::size_t i = 1; i < eps.size(); ++i)
    if (!(eps[i] < eps[i - 1])) throw ConfigError("gamma study: eps list must decrease");

  const int n_theta = static_cast<int>(std::ceil(rc.oversample * (rc.l_max + 1) - 1e-9));
  for (double e : eps)
    if (e < 4.0 * std::numbers::pi * rc.model.R / n_theta)
      throw ConfigError("gamma study: eps " + std::to_string(e) +
                        " unresolvable on this grid (need eps >= 4 pi R / n_theta)");

  const auto rows = detail::parallel_map(
      eps.size(),
      [&](std::size_t i) {
        GammaRow row;
        row.eps = eps[i];
        ModelParams p = rc.model;
        p.epsilon = eps[i];
        auto grid = build_grid(p.R, rc.l_max, rc.oversample);
        SpectralField phi = tanh_capset_profile(grid, study.capset, p.epsilon);
        p.alpha = mean(phi);
        row.j_eps = energy_J(phi, p);
        row.k_phi = energy_K(phi, p);
        row.e_reduced = row.j_eps + row.k_phi;
        row.j0_target = p.b_hat() * cap_perimeter(study.capset, p.R);
        const SharpSeriesResult series = sharp_energy_series(study.capset, p, rc.l_max);
        row.e_si = series.value;
        row.k_chi = series.value - row.j0_target;
        row.err_j = std::abs(row.j_eps - row.j0_target);
        row.err_e = std::abs(row.e_reduced - row.e_si);
        return row;
      },
      env_thread_cap());
  study.rows = rows;
  for (std::size_t i = 1; i < study.rows.size(); ++i) {
    const double le = std::log(eps[i - 1] / eps[i]);
    study.rows[i].rate_j = std::log(study.rows[i - 1].err_j / study.rows[i].err_j) / le;
    study.rows[i].rate_e = std::log(study.rows[i - 1].err_e / study.rows[i].err_e) / le;
  }
  return study;
}

inline void write_gamma_csv(const std::filesystem::path& path, const GammaStudy& study,
                            const RunConfig& rc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("gamma study: cannot open " + path.string());
  out << "# membrane gamma study\n"
      << params_comment_block(rc.model, nullptr) << "# grid.l_max = " << rc.l_max << "\n";
  out << "eps[length],J_eps[energy],K_phi[energy],E_reduced[energy],J0_target[energy],"
         "K_chi[energy],E_SI[energy],err_J[energy],err_E[energy],rate_J[-],rate_E[-]\n";
  for (const auto& r : study.rows) {
    out << detail::g17(r.eps) << ',' << detail::g17(r.j_eps) << ',' << detail::g17(r.k_phi)
        << ',' << detail::g17(r.e_reduced) << ',' << detail::g17(r.j0_target) << ','
        << detail::g17(r.k_chi) << ',' << detail::g17(r.e_si) << ',' << detail::g17(r.err_j)
        << ',' << detail::g17(r.err_e) << ',' << detail::g17(r.rate_j) << ','
        << detail::g17(r.rate_e) << '\n';
  }
}

// ---------------------------------------------------------------------------
// axisym studies

struct CompareRow {
  double t = 0.0;
  double ode_theta1 = 0.0, ode_theta2 = 0.0;
  double pf_theta1 = 0.0, pf_theta2 = 0.0;
};

struct AxisymCompare {
  TwoCapTrajectory trajectory;
  std::vector<CompareRow> compare;  // empty unless mode "compare"
};

/// Sharp two-cap ODE, optionally tracked against a matched full phase-field
/// run started from the tanh profile of the same cap set.
inline AxisymCompare run_axisym_compare(const RunConfig& rc, int n_checkpoints = 5) {
  AxisymCompare out;
  const CapSet cs = capset_from_config(rc);
  if (cs.caps.size() != 2 && rc.axisym_mode == "compare")
    throw ConfigError("axisym compare: needs caps.north and caps.south");
  out.trajectory =
      two_cap_flow(cs, rc.model, rc.axisym_dt, rc.axisym_t_end, rc.axisym_l_series);
  if (rc.axisym_mode != "compare") return out;

  // matched diffuse run
  auto grid = build_grid(rc.model.R, rc.l_max, rc.oversample);
  ModelParams p = rc.model;
  SpectralField phi = tanh_capset_profile(grid, cs, p.epsilon);
  p.alpha = mean(phi);
  FlowParams fp = rc.flow;
  FlowState state = make_state(std::move(phi), p, fp.dt);

  auto ode_theta_at = [&](double t, int which) {
    // linear interpolation in the ODE trajectory
    const auto& rows = out.trajectory.rows;
    if (t <= rows.front().t)
      return which == 0 ? rows.front().theta1 : rows.front().theta2;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].t >= t) {
        const double s = (t - rows[i - 1].t) / (rows[i].t - rows[i - 1].t);
        const double a = which == 0 ? rows[i - 1].theta1 : rows[i - 1].theta2;
        const double b = which == 0 ? rows[i].theta1 : rows[i].theta2;
        return a + s * (b - a);
      }
    }
    return which == 0 ? rows.back().theta1 : rows.back().theta2;
  };

  for (int k = 1; k <= n_checkpoints; ++k) {
    const double t_k = rc.axisym_t_end * k / n_checkpoints;
    while (state.t < t_k - 1e-12) {
      FlowParams seg = fp;
      seg.dt_max = std::min(fp.dt_max, t_k - state.t);
      state = step_imex(state, p, seg);
    }
    const auto zeros = find_zonal_zeros(zonal_part(state.phi));
    CompareRow row;
    row.t = state.t;
    row.pf_theta1 = zeros.empty() ? 0.0 : zeros.front();
    row.pf_theta2 = zeros.empty() ? 0.0 : std::numbers::pi - zeros.back();
    row.ode_theta1 = ode_theta_at(state.t, 0);
    row.ode_theta2 = ode_theta_at(state.t, 1);
    out.compare.push_back(row);
  }
  return out;
}

inline void write_two_cap_csv(const std::filesystem::path& path, const TwoCapTrajectory& traj,
                              const RunConfig& rc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("axisym: cannot open " + path.string());
  out << "# membrane two-cap sharp flow\n" << params_comment_block(rc.model, nullptr);
  out << "t[time],theta1[rad],theta2[rad],V1[length/time],V2[length/time],E_SI[energy],alpha[-]\n";
  for (const auto& r : traj.rows)
    out << detail::g17(r.t) << ',' << detail::g17(r.theta1) << ',' << detail::g17(r.theta2)
        << ',' << detail::g17(r.v1) << ',' << detail::g17(r.v2) << ',' << detail::g17(r.energy)
        << ',' << detail::g17(r.alpha) << '\n';
}

inline void write_compare_csv(const std::filesystem::path& path,
                              const std::vector<CompareRow>& rows, const RunConfig& rc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("axisym: cannot open " + path.string());
  out << "# membrane sharp-vs-diffuse interface tracking\n"
      << params_comment_block(rc.model, nullptr);
  out << "t[time],ode_theta1[rad],ode_theta2[rad],pf_theta1[rad],pf_theta2[rad]\n";
  for (const auto& r : rows)
    out << detail::g17(r.t) << ',' << detail::g17(r.ode_theta1) << ','
        << detail::g17(r.ode_theta2) << ',' << detail::g17(r.pf_theta1) << ','
        << detail::g17(r.pf_theta2) << '\n';
}

struct JumpRow {
  double eps = 0.0;
  int l_max = 0;
  double theta_star = 0.0;
  double jump_u = 0.0, jump_grad = 0.0, jump_lap = 0.0;
  double ratio = 0.0;  // jump_lap / (-2 Lambda)
};

/// Relax a single tanh cap at each eps (grid sized for resolvability) and
/// extract the one-sided jumps of the slaved height at the interface.
inline std::vector<JumpRow> run_jump_study(const RunConfig& rc) {
  std::vector<double> eps = rc.eps_list;
  if (eps.empty()) eps = {0.1 * rc.model.R, 0.05 * rc.model.R, 0.025 * rc.model.R};
  const double theta0 = rc.cap_north.value_or(1.0);

  auto rows = detail::parallel_map(
      eps.size(),
      [&](std::size_t i) {
        ModelParams p = rc.model;
        p.epsilon = eps[i];
        int l_max = 64;
        while (rc.oversample * (l_max + 1) < 4.0 * std::numbers::pi * p.R / p.epsilon &&
               l_max < 512)
          l_max *= 2;
        auto grid = build_grid(p.R, l_max, rc.oversample);
        CapSet cs{{Cap{Pole::north, theta0}}};
        SpectralField phi = tanh_capset_profile(grid, cs, p.epsilon);
        p.alpha = mean(phi);
        FlowParams fp = rc.flow;
        // explicit-term stability shrinks with eps^2
        const double scale = (p.epsilon / eps.front()) * (p.epsilon / eps.front());
        fp.dt = rc.flow.dt * scale;
        fp.dt_max = rc.flow.dt_max * scale;
        fp.dt_min = std::min(fp.dt_min, fp.dt * 1e-6);
        const FlowResult res = run_flow(std::move(phi), p, fp);
        if (res.status == FlowStatus::diverged || res.status == FlowStatus::dt_underflow)
          throw std::runtime_error("jump study: relax failed at eps " + std::to_string(eps[i]));
        const JumpReport jr = jump_extract(res.state, p);
        JumpRow row;
        row.eps = eps[i];
        row.l_max = l_max;
        row.theta_star = jr.theta_star;
        row.jump_u = jr.jump_u;
        row.jump_grad = jr.jump_grad;
        row.jump_lap = jr.jump_lap;
        row.ratio = p.Lambda > 0.0 ? jr.jump_lap / (-2.0 * p.Lambda) : 0.0;
        return row;
      },
      env_thread_cap());
  return rows;
}

inline void write_jump_csv(const std::filesystem::path& path, const std::vector<JumpRow>& rows,
                           const RunConfig& rc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("axisym: cannot open " + path.string());
  out << "# membrane jump-condition study\n" << params_comment_block(rc.model, nullptr);
  out << "eps[length],l_max[-],theta_star[rad],jump_u[length],jump_grad[-],"
         "jump_lap[1/length],ratio_to_minus2Lambda[-]\n";
  for (const auto& r : rows)
    out << detail::g17(r.eps) << ',' << r.l_max << ',' << detail::g17(r.theta_star) << ','
        << detail::g17(r.jump_u) << ',' << detail::g17(r.jump_grad) << ','
        << detail::g17(r.jump_lap) << ',' << detail::g17(r.ratio) << '\n';
}

}  // namespace membrane
