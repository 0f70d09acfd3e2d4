// membrane: batch driver for the spherical two-phase membrane model.
//
// Subcommands: relax, gamma-study, axisym, energy, selftest. Configuration
// comes from a flat key-value file; repeated --set key=value flags override
// file entries. Exit codes: 0 success, 1 configuration error, 2 numerical
// failure, 3 selftest failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "membrane/selftest.hpp"
#include "membrane/studies.hpp"

namespace {

membrane::RunConfig load_config(const std::string& config_path,
                                const std::vector<std::string>& overrides,
                                const std::string& out_dir) {
  membrane::Config c;
  if (!config_path.empty()) c = membrane::Config::from_file(config_path);
  for (const auto& kv : overrides) c.apply_override(kv);
  if (!out_dir.empty()) c.set("outputs.dir", out_dir);
  return membrane::make_run_config(c);
}

int cmd_relax(const membrane::RunConfig& rc) {
  const membrane::RelaxArtifacts art = membrane::run_relax(rc);
  std::printf("relax: status=%s steps=%ld t=%.6g E=%.12g -> %s\n",
              membrane::to_string(art.result.status), art.result.state.step_count,
              art.result.state.t, art.result.state.energy(),
              art.diagnostics_csv.string().c_str());
  const bool ok = art.result.status == membrane::FlowStatus::converged ||
                  art.result.status == membrane::FlowStatus::reached_t_end ||
                  art.result.status == membrane::FlowStatus::reached_max_steps;
  return ok ? 0 : 2;
}

int cmd_gamma(const membrane::RunConfig& rc) {
  const membrane::GammaStudy study = membrane::run_gamma_study(rc);
  std::filesystem::create_directories(rc.outputs.dir);
  const auto path = rc.outputs.dir / "gamma_study.csv";
  membrane::write_gamma_csv(path, study, rc);
  for (const auto& r : study.rows)
    std::printf("eps=%-8.4g J=%.8g |J-J0|=%.3e rate=%.2f  |E-E_SI|=%.3e rate=%.2f\n", r.eps,
                r.j_eps, r.err_j, r.rate_j, r.err_e, r.rate_e);
  std::printf("gamma-study: wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_axisym(const membrane::RunConfig& rc) {
  std::filesystem::create_directories(rc.outputs.dir);
  if (rc.axisym_mode == "jump") {
    const auto rows = membrane::run_jump_study(rc);
    const auto path = rc.outputs.dir / "jump_study.csv";
    membrane::write_jump_csv(path, rows, rc);
    for (const auto& r : rows)
      std::printf("eps=%-8.4g L=%d theta*=%.4f [u]=%.2e [du]=%.2e [lap u]=%.4f ratio=%.3f\n",
                  r.eps, r.l_max, r.theta_star, r.jump_u, r.jump_grad, r.jump_lap, r.ratio);
    std::printf("axisym: wrote %s\n", path.string().c_str());
    return 0;
  }
  const membrane::AxisymCompare res = membrane::run_axisym_compare(rc);
  membrane::write_two_cap_csv(rc.outputs.dir / "two_cap.csv", res.trajectory, rc);
  std::printf("axisym: sharp flow %s, %zu rows\n", membrane::to_string(res.trajectory.status),
              res.trajectory.rows.size());
  if (!res.compare.empty()) {
    membrane::write_compare_csv(rc.outputs.dir / "compare.csv", res.compare, rc);
    for (const auto& r : res.compare)
      std::printf("t=%-8.4g ode=(%.4f, %.4f) pf=(%.4f, %.4f)\n", r.t, r.ode_theta1,
                  r.ode_theta2, r.pf_theta1, r.pf_theta2);
  }
  if (res.trajectory.status == membrane::TwoCapStatus::dt_underflow) return 2;
  return 0;
}

int cmd_energy(const std::string& checkpoint_path) {
  const membrane::LoadedCheckpoint lc = membrane::load_checkpoint(checkpoint_path);
  const membrane::EnergyReport full =
      membrane::energy_diffuse(lc.state.u, lc.state.phi, lc.params);
  const membrane::EnergyReport reduced =
      membrane::energy_reduced_report(lc.state.phi, lc.params);
  nlohmann::json j;
  j["t"] = lc.state.t;
  j["step_count"] = lc.state.step_count;
  j["E_DI"] = {{"total", full.total},
               {"bending", *full.bending},
               {"dirichlet", *full.dirichlet},
               {"potential", *full.potential}};
  j["E_reduced"] = {{"total", reduced.total},
                    {"dirichlet", *reduced.dirichlet},
                    {"potential", *reduced.potential},
                    {"coupling_K", *reduced.coupling_K}};
  j["lambda"] = lc.state.lambda;
  j["mass"] = membrane::mean(lc.state.phi);
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudo-spectral simulator for two-phase membrane composition on a sphere"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "configuration file (key = value lines)");
    sub->add_option("--set", overrides, "override, e.g. --set model.kappa=2.0")->take_all();
    sub->add_option("-o,--out", out_dir, "output directory (overrides outputs.dir)");
  };

  CLI::App* relax = app.add_subcommand("relax", "run the conserved gradient flow");
  add_common(relax);
  CLI::App* gamma = app.add_subcommand("gamma-study", "sharp-interface limit sweep over eps");
  add_common(gamma);
  CLI::App* axi = app.add_subcommand("axisym", "sharp cap dynamics / jump-condition studies");
  add_common(axi);
  CLI::App* energy = app.add_subcommand("energy", "one-shot energy report for a checkpoint");
  energy->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  CLI::App* self = app.add_subcommand("selftest", "run the invariant battery");

  CLI11_PARSE(app, argc, argv);

  try {
    if (relax->parsed()) return cmd_relax(load_config(config_path, overrides, out_dir));
    if (gamma->parsed()) return cmd_gamma(load_config(config_path, overrides, out_dir));
    if (axi->parsed()) return cmd_axisym(load_config(config_path, overrides, out_dir));
    if (energy->parsed()) return cmd_energy(checkpoint_path);
    if (self->parsed())
      return membrane::print_selftest(membrane::run_selftest_battery()) ? 0 : 3;
  } catch (const membrane::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const membrane::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
