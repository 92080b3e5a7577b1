#include "xdiff_cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>

#include "xdiff/metrics.hpp"
#include "xdiff/serialize.hpp"
#include "xdiff/synthdata.hpp"
#include "xdiff_cli/formats.hpp"

namespace fs = std::filesystem;

namespace xdiff::cli {

namespace {

std::string fmt6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<fs::path> list_xvol_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xvol") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::invalid_argument("no .xvol volumes in " + dir);
  return files;
}

// k conditioning depths spread evenly over [1, side].
std::vector<int> spread_depths(int side, int k) {
  if (k < 1 || k > side) throw std::invalid_argument("slice count must lie in [1, side]");
  std::vector<int> depths(k);
  for (int j = 0; j < k; ++j) {
    depths[j] = static_cast<int>((j + 0.5) * side / k) + 1;
    depths[j] = std::min(depths[j], side);
  }
  depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
  return depths;
}

std::vector<int> sorted_unique_indices(std::vector<int> indices, int side) {
  if (indices.empty()) throw std::invalid_argument("at least one slice index is required");
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  for (int d : indices) {
    if (d < 1 || d > side) throw std::out_of_range("slice index out of range: " + std::to_string(d));
  }
  return indices;
}

std::vector<Slice> gather_slices(const Volume& v, const std::vector<int>& depths) {
  std::vector<Slice> slices;
  slices.reserve(depths.size());
  for (int d : depths) slices.push_back(extract_slice(v, d));
  return slices;
}

Aggregator parse_aggregator(const std::string& name) {
  if (name == "mean") return Aggregator::kMean;
  if (name == "max") return Aggregator::kMax;
  throw std::invalid_argument("aggregator must be mean or max");
}

void write_slice_exports(const std::string& out_path, const Volume& v) {
  const fs::path dir = out_path + "_slices";
  fs::create_directories(dir);
  double lo = v.data[0], hi = v.data[0];
  for (double x : v.data) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  for (int d = 1; d <= v.side; ++d) {
    char name[32];
    std::snprintf(name, sizeof name, "d_%03d.pgm", d);
    write_pgm((dir / name).string(), extract_slice(v, d), lo, hi);
  }
}

Slice resize_bilinear(const Slice& s, int out_side) {
  std::vector<double> out(static_cast<std::size_t>(out_side) * out_side);
  const double scale = static_cast<double>(s.side) / out_side;
  for (int y = 0; y < out_side; ++y) {
    for (int x = 0; x < out_side; ++x) {
      const double sy = (y + 0.5) * scale - 0.5;
      const double sx = (x + 0.5) * scale - 0.5;
      const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
      const double ty = sy - y0, tx = sx - x0;
      double acc = 0.0;
      for (int cy = 0; cy < 2; ++cy) {
        const int yy = std::clamp(y0 + cy, 0, s.side - 1);
        const double wy = cy ? ty : 1.0 - ty;
        for (int cx = 0; cx < 2; ++cx) {
          const int xx = std::clamp(x0 + cx, 0, s.side - 1);
          const double wx = cx ? tx : 1.0 - tx;
          acc += wy * wx * s.at(yy, xx);
        }
      }
      out[static_cast<std::size_t>(y) * out_side + x] = acc;
    }
  }
  return Slice(out_side, std::move(out));
}

std::uint64_t transform_seed_tag(const SliceTransform& t) {
  // Depends on the transform identity, not its list position, so the TTA mean
  // is invariant to listing order; the identity transform tags zero.
  const std::uint64_t kind_id = static_cast<std::uint64_t>(t.kind);
  return (kind_id * 0x9E3779B97F4A7C15ULL) ^ (static_cast<std::uint64_t>(t.scale - 1) << 20);
}

}  // namespace

Slice SliceTransform::apply(const Slice& s) const {
  const int S = s.side;
  std::vector<double> out(s.data.size());
  switch (kind) {
    case Kind::kIdentity:
      return s;
    case Kind::kHFlip:
      for (int h = 0; h < S; ++h)
        for (int w = 0; w < S; ++w) out[static_cast<std::size_t>(h) * S + w] = s.at(h, S - 1 - w);
      break;
    case Kind::kVFlip:
      for (int h = 0; h < S; ++h)
        for (int w = 0; w < S; ++w) out[static_cast<std::size_t>(h) * S + w] = s.at(S - 1 - h, w);
      break;
    case Kind::kRot90:
      for (int h = 0; h < S; ++h)
        for (int w = 0; w < S; ++w) out[static_cast<std::size_t>(h) * S + w] = s.at(S - 1 - w, h);
      break;
    case Kind::kRot180:
      for (int h = 0; h < S; ++h)
        for (int w = 0; w < S; ++w)
          out[static_cast<std::size_t>(h) * S + w] = s.at(S - 1 - h, S - 1 - w);
      break;
    case Kind::kRot270:
      for (int h = 0; h < S; ++h)
        for (int w = 0; w < S; ++w) out[static_cast<std::size_t>(h) * S + w] = s.at(w, S - 1 - h);
      break;
    case Kind::kScale: {
      if (S % scale != 0) throw std::invalid_argument("scale must divide the slice side");
      const int crop = S / scale;
      const int off = (S - crop) / 2;
      std::vector<double> box(static_cast<std::size_t>(crop) * crop);
      for (int h = 0; h < crop; ++h)
        for (int w = 0; w < crop; ++w)
          box[static_cast<std::size_t>(h) * crop + w] = s.at(off + h, off + w);
      return resize_bilinear(Slice(crop, std::move(box)), S);
    }
  }
  return Slice(S, std::move(out));
}

std::pair<Slice, Slice> SliceTransform::invert(const Slice& s) const {
  const int S = s.side;
  const Slice ones = constant_slice(S, 1.0);
  switch (kind) {
    case Kind::kIdentity:
      return {s, ones};
    case Kind::kHFlip:
    case Kind::kVFlip:
    case Kind::kRot180:
      return {apply(s), ones};  // self-inverse permutations
    case Kind::kRot90: {
      SliceTransform inv{Kind::kRot270, 1};
      return {inv.apply(s), ones};
    }
    case Kind::kRot270: {
      SliceTransform inv{Kind::kRot90, 1};
      return {inv.apply(s), ones};
    }
    case Kind::kScale: {
      const int crop = S / scale;
      const int off = (S - crop) / 2;
      const Slice small = resize_bilinear(s, crop);
      std::vector<double> plane(static_cast<std::size_t>(S) * S, 0.0);
      std::vector<double> mask(plane.size(), 0.0);
      for (int h = 0; h < crop; ++h) {
        for (int w = 0; w < crop; ++w) {
          plane[static_cast<std::size_t>(off + h) * S + (off + w)] = small.at(h, w);
          mask[static_cast<std::size_t>(off + h) * S + (off + w)] = 1.0;
        }
      }
      return {Slice(S, std::move(plane)), Slice(S, std::move(mask))};
    }
  }
  return {s, ones};
}

std::vector<SliceTransform> expand_transform_tokens(const std::vector<std::string>& tokens,
                                                    int side) {
  using K = SliceTransform::Kind;
  std::vector<SliceTransform> out{{K::kIdentity, 1}};
  auto add = [&out](SliceTransform t) {
    for (const SliceTransform& have : out) {
      if (have.kind == t.kind && have.scale == t.scale) return;
    }
    out.push_back(t);
  };
  for (const std::string& tok : tokens) {
    if (tok == "identity") {
      continue;  // always present
    } else if (tok == "flips") {
      add({K::kHFlip, 1});
      add({K::kVFlip, 1});
    } else if (tok == "rot90") {
      add({K::kRot90, 1});
      add({K::kRot180, 1});
      add({K::kRot270, 1});
    } else if (tok == "scale") {
      if (side % 4 != 0) {
        throw std::invalid_argument("scale transforms need a side divisible by 4");
      }
      add({K::kScale, 2});
      add({K::kScale, 4});
    } else {
      throw std::invalid_argument("unknown transform token '" + tok + "'");
    }
  }
  return out;
}

Volume tta_reconstruct(const Denoiser& net, const NoiseSchedule& sched, const Volume& input,
                       const std::vector<int>& slice_indices,
                       const std::vector<SliceTransform>& transforms, int n_views, double eta,
                       int steps, std::uint64_t seed) {
  const std::vector<int> depths = sorted_unique_indices(slice_indices, input.side);
  const std::vector<Slice> base = gather_slices(input, depths);
  const int S = input.side;
  const std::size_t voxels = input.voxels();

  std::vector<std::vector<double>> values(voxels);
  for (const SliceTransform& t : transforms) {
    std::vector<Slice> cond;
    cond.reserve(base.size());
    for (const Slice& s : base) cond.push_back(t.apply(s));
    const Volume rec = reconstruct(net, cond, depths, n_views, S, sched, eta, steps,
                                   seed ^ transform_seed_tag(t), Aggregator::kMean,
                                   input.spacing);
    for (int d = 1; d <= S; ++d) {
      const auto [plane, mask] = t.invert(extract_slice(rec, d));
      const std::size_t off = static_cast<std::size_t>(d - 1) * S * S;
      for (std::size_t i = 0; i < plane.data.size(); ++i) {
        if (mask.data[i] > 0.0) values[off + i].push_back(plane.data[i]);
      }
    }
  }

  std::vector<double> out(voxels);
  for (std::size_t i = 0; i < voxels; ++i) {
    std::vector<double>& vals = values[i];
    std::sort(vals.begin(), vals.end());
    double sum = 0.0;
    for (double v : vals) sum += v;
    out[i] = vals.empty() ? 0.0 : sum / static_cast<double>(vals.size());
  }
  return Volume(S, input.spacing, std::move(out));
}

void cmd_synth(const SynthArgs& args, std::ostream& out) {
  if (args.n < 1) throw std::invalid_argument("synth: --n must be >= 1");
  fs::create_directories(args.out_dir);
  const auto volumes = gen_dataset(args.n, args.side, args.seed);
  for (int i = 0; i < args.n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "vol_%03d.xvol", i);
    const fs::path path = fs::path(args.out_dir) / name;
    write_xvol(path.string(), volumes[i]);
    out << name << "\n";
  }
}

void cmd_train(const RunConfig& cfg, std::ostream& diag) {
  const auto files = list_xvol_files(cfg.data_dir);
  std::vector<Volume> dataset;
  dataset.reserve(files.size());
  for (const auto& f : files) dataset.push_back(read_xvol(f.string()));

  const NoiseSchedule sched = linear_schedule(cfg.train.t_count, cfg.beta_start, cfg.beta_end);

  std::ofstream csv(cfg.loss_csv_out, std::ios::trunc);
  if (!csv) throw IoError("cannot open loss csv for writing: " + cfg.loss_csv_out);
  csv << "step,loss\n";
  double window = 0.0;
  const ConvDenoiser net = train(dataset, cfg.train, sched, [&](int step, double loss) {
    window += loss;
    if (step % 100 == 0) {
      csv << step << "," << fmt6(window / 100.0) << "\n";
      window = 0.0;
      diag << "step " << step << "\n";
    }
  });
  if (!csv) throw IoError("failed writing loss csv: " + cfg.loss_csv_out);
  csv.close();
  save_checkpoint(cfg.checkpoint_out, net, sched);
}

void cmd_reconstruct(const ReconstructArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const Volume input = read_xvol(args.input_volume);
  if (args.steps < 1 || args.steps > ckpt.schedule.T()) {
    throw std::invalid_argument("reconstruct: --steps must lie in [1, T]");
  }
  if (args.eta < 0.0 || args.eta > 1.0) {
    throw std::invalid_argument("reconstruct: --eta must lie in [0, 1]");
  }
  const std::vector<int> depths = sorted_unique_indices(args.slice_indices, input.side);
  const Volume rec = reconstruct(ckpt.net, gather_slices(input, depths), depths, args.n_views,
                                 input.side, ckpt.schedule, args.eta, args.steps, args.seed,
                                 parse_aggregator(args.aggregator), input.spacing);
  write_xvol(args.out, rec);
  write_slice_exports(args.out, rec);
}

void cmd_evaluate(const EvaluateArgs& args, std::ostream& out) {
  if (args.generated.empty() || args.generated.size() != args.reference.size()) {
    throw std::invalid_argument("evaluate: --generated and --reference must pair up");
  }
  MetricsReport rep;
  const std::size_t n = args.generated.size();
  double psnr_sum = 0.0, ax = 0.0, co = 0.0, sa = 0.0, bv_gen = 0.0, bv_ref = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Volume gen = read_xvol(args.generated[i]);
    const Volume ref = read_xvol(args.reference[i]);
    psnr_sum += psnr3d(ref, gen);
    ax += ssim_plane_mean(ref, gen, Plane::kAxial, 1.0);
    co += ssim_plane_mean(ref, gen, Plane::kCoronal, 1.0);
    sa += ssim_plane_mean(ref, gen, Plane::kSagittal, 1.0);
    bv_gen += brain_volume(gen);
    bv_ref += brain_volume(ref);
  }
  rep.set("n_pairs", static_cast<double>(n));
  rep.set("psnr_db", psnr_sum / static_cast<double>(n));
  rep.set("ssim_axial", ax / static_cast<double>(n));
  rep.set("ssim_coronal", co / static_cast<double>(n));
  rep.set("ssim_sagittal", sa / static_cast<double>(n));
  rep.set("brain_volume_mm3", bv_gen / static_cast<double>(n));
  rep.set("brain_volume_ref_mm3", bv_ref / static_cast<double>(n));

  if (!args.mask_gen.empty() || !args.mask_ref.empty()) {
    if (args.mask_gen.empty() || args.mask_ref.empty()) {
      throw std::invalid_argument("evaluate: masks must be given in pairs");
    }
    const SegMask gen = read_mask(args.mask_gen);
    const SegMask ref = read_mask(args.mask_ref);
    std::vector<int> classes = args.class_ids;
    if (classes.empty()) classes.push_back(1);
    for (int c : classes) {
      rep.set("dice_class_" + std::to_string(c), dice(ref, gen, c));
    }
  }

  if (!args.centerline_gen.empty() || !args.centerline_ref.empty()) {
    if (args.centerline_gen.size() != args.centerline_ref.size() || args.centerline_gen.empty()) {
      throw std::invalid_argument("evaluate: centerlines must pair up");
    }
    std::vector<double> kg, kr;
    for (std::size_t i = 0; i < args.centerline_gen.size(); ++i) {
      kg.push_back(curvature(read_centerline(args.centerline_gen[i])).kappa_max_abs);
      kr.push_back(curvature(read_centerline(args.centerline_ref[i])).kappa_max_abs);
    }
    double mg = 0.0, mr = 0.0;
    for (std::size_t i = 0; i < kg.size(); ++i) {
      mg += kg[i];
      mr += kr[i];
    }
    rep.set("kappa_gen", mg / static_cast<double>(kg.size()));
    rep.set("kappa_ref", mr / static_cast<double>(kr.size()));
    if (kg.size() >= 2) rep.set("pearson_curvature", pearson(kg, kr));
  }

  out << rep.to_text();
}

void cmd_sweep(const SweepArgs& args, std::ostream& diag) {
  if (args.values.empty()) throw std::invalid_argument("sweep: --values must not be empty");
  const bool distance = args.mode == "distance";
  if (args.mode != "slices" && args.mode != "views" && args.mode != "timesteps" && !distance) {
    throw std::invalid_argument("sweep: --mode must be slices, views, timesteps, or distance");
  }
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const auto files = list_xvol_files(args.test_dir);

  std::ofstream csv(args.out_csv, std::ios::trunc);
  if (!csv) throw IoError("cannot open csv for writing: " + args.out_csv);
  csv << (distance ? "value,volume,depth,mse\n"
                   : "value,volume,psnr_db,ssim_axial,ssim_coronal,ssim_sagittal\n");

  for (const int value : args.values) {
    if (value < 1) throw std::invalid_argument("sweep: values must be positive");
    std::size_t vol_idx = 0;
    for (const auto& file : files) {
      const Volume target = read_xvol(file.string());
      const std::string id = file.stem().string();
      const std::uint64_t seed = args.seed ^ (vol_idx + 1);

      int k = args.k_slices, n_views = args.n_views, steps = args.steps;
      std::vector<int> depths;
      if (args.mode == "slices") {
        depths = spread_depths(target.side, value);
      } else if (distance) {
        depths = {value};
        if (value > target.side) throw std::out_of_range("sweep: depth beyond volume side");
      } else {
        depths = spread_depths(target.side, k);
        if (args.mode == "views") n_views = value;
        if (args.mode == "timesteps") steps = value;
      }
      if (steps > ckpt.schedule.T()) throw std::invalid_argument("sweep: steps exceed T");

      const Volume rec =
          reconstruct(ckpt.net, gather_slices(target, depths), depths, n_views, target.side,
                      ckpt.schedule, args.eta, steps, seed, Aggregator::kMean, target.spacing);
      if (distance) {
        const auto series = mse_by_slice(target, rec);
        for (int d = 1; d <= target.side; ++d) {
          csv << value << "," << id << "," << d << "," << fmt6(series[d - 1]) << "\n";
        }
      } else {
        csv << value << "," << id << "," << fmt6(psnr3d(target, rec)) << ","
            << fmt6(ssim_plane_mean(target, rec, Plane::kAxial, 1.0)) << ","
            << fmt6(ssim_plane_mean(target, rec, Plane::kCoronal, 1.0)) << ","
            << fmt6(ssim_plane_mean(target, rec, Plane::kSagittal, 1.0)) << "\n";
      }
      ++vol_idx;
    }
    diag << "sweep value " << value << " done\n";
  }
  if (!csv) throw IoError("failed writing csv: " + args.out_csv);
}

void cmd_tta(const TtaArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const Volume input = read_xvol(args.input_volume);
  const auto transforms = expand_transform_tokens(args.transforms, input.side);
  const Volume rec = tta_reconstruct(ckpt.net, ckpt.schedule, input, args.slice_indices,
                                     transforms, args.n_views, args.eta, args.steps, args.seed);
  write_xvol(args.out, rec);
}

std::vector<int> active_select_greedy(const Denoiser& net, const NoiseSchedule& sched,
                                      const Volume& target, int budget, int candidate_stride,
                                      int n_views, double eta, int steps, std::uint64_t seed,
                                      std::vector<std::pair<int, double>>* round_log) {
  if (candidate_stride < 1) throw std::invalid_argument("candidate stride must be >= 1");
  std::vector<int> candidates;
  for (int d = 1; d <= target.side; d += candidate_stride) candidates.push_back(d);
  if (budget < 1 || budget > static_cast<int>(candidates.size())) {
    throw std::invalid_argument("budget exceeds the candidate count");
  }

  std::vector<int> chosen;
  for (int round = 0; round < budget; ++round) {
    int best_d = -1;
    double best_psnr = -std::numeric_limits<double>::infinity();
    for (int cand : candidates) {
      if (std::find(chosen.begin(), chosen.end(), cand) != chosen.end()) continue;
      std::vector<int> trial = chosen;
      trial.push_back(cand);
      std::sort(trial.begin(), trial.end());
      const Volume rec = reconstruct(net, gather_slices(target, trial), trial, n_views,
                                     target.side, sched, eta, steps, seed, Aggregator::kMean,
                                     target.spacing);
      const double p = psnr3d(target, rec);
      if (p > best_psnr) {
        best_psnr = p;
        best_d = cand;
      }
    }
    chosen.push_back(best_d);
    std::sort(chosen.begin(), chosen.end());
    if (round_log) round_log->emplace_back(best_d, best_psnr);
  }
  return chosen;
}

std::vector<int> cmd_active_select(const ActiveSelectArgs& args, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const Volume target = read_xvol(args.target_volume);
  std::vector<std::pair<int, double>> rounds;
  const std::vector<int> chosen =
      active_select_greedy(ckpt.net, ckpt.schedule, target, args.budget, args.candidate_stride,
                           args.n_views, args.eta, args.steps, args.seed, &rounds);

  if (!args.out_csv.empty()) {
    std::ofstream csv(args.out_csv, std::ios::trunc);
    if (!csv) throw IoError("cannot open csv for writing: " + args.out_csv);
    csv << "round,selected_depth,psnr_db\n";
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      csv << (i + 1) << "," << rounds[i].first << "," << fmt6(rounds[i].second) << "\n";
    }
    if (!csv) throw IoError("failed writing csv: " + args.out_csv);
  }

  for (std::size_t i = 0; i < chosen.size(); ++i) {
    out << chosen[i] << (i + 1 < chosen.size() ? ' ' : '\n');
  }
  return chosen;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"xdiff: cross-sectional diffusion for sparse-slice volume reconstruction"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cone dataset");
  synth_cmd->add_option("--n", synth.n, "number of volumes");
  synth_cmd->add_option("--side", synth.side, "cube side");
  synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();

  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "train a denoiser from a config file");
  train_cmd->add_option("--config", config_path, "key = value config file")->required();

  ReconstructArgs rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "reconstruct a volume from a few slices");
  rec_cmd->add_option("--checkpoint", rec.checkpoint, "trained checkpoint")->required();
  rec_cmd->add_option("--input-volume", rec.input_volume, "volume supplying the input slices")
      ->required();
  rec_cmd->add_option("--slice-indices", rec.slice_indices, "1-based depth indices")
      ->required()
      ->delimiter(',');
  rec_cmd->add_option("--n-views", rec.n_views, "azimuth views to average");
  rec_cmd->add_option("--eta", rec.eta, "DDIM eta in [0,1]");
  rec_cmd->add_option("--steps", rec.steps, "sampler steps (<= T)");
  rec_cmd->add_option("--aggregator", rec.aggregator, "mean or max");
  rec_cmd->add_option("--seed", rec.seed, "random seed");
  rec_cmd->add_option("--out", rec.out, "output volume path")->required();

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "metric report for generated vs reference");
  ev_cmd->add_option("--generated", ev.generated, "generated volume(s)")->required();
  ev_cmd->add_option("--reference", ev.reference, "reference volume(s)")->required();
  ev_cmd->add_option("--mask-gen", ev.mask_gen, "generated segmentation mask");
  ev_cmd->add_option("--mask-ref", ev.mask_ref, "reference segmentation mask");
  ev_cmd->add_option("--class", ev.class_ids, "mask class id(s)");
  ev_cmd->add_option("--centerline-gen", ev.centerline_gen, "generated centerline(s)");
  ev_cmd->add_option("--centerline-ref", ev.centerline_ref, "reference centerline(s)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "ablation sweeps over a test directory");
  sweep_cmd->add_option("--mode", sweep.mode, "slices | views | timesteps | distance")
      ->required();
  sweep_cmd->add_option("--values", sweep.values, "sweep values")->required()->delimiter(',');
  sweep_cmd->add_option("--test-dir", sweep.test_dir, "directory of test volumes")->required();
  sweep_cmd->add_option("--checkpoint", sweep.checkpoint, "trained checkpoint")->required();
  sweep_cmd->add_option("--out-csv", sweep.out_csv, "output CSV")->required();
  sweep_cmd->add_option("--k-slices", sweep.k_slices, "conditioning slices (non-slices modes)");
  sweep_cmd->add_option("--n-views", sweep.n_views, "views (non-views modes)");
  sweep_cmd->add_option("--eta", sweep.eta, "DDIM eta");
  sweep_cmd->add_option("--steps", sweep.steps, "sampler steps");
  sweep_cmd->add_option("--seed", sweep.seed, "random seed");

  TtaArgs tta;
  auto* tta_cmd = app.add_subcommand("tta", "test-time augmented reconstruction");
  tta_cmd->add_option("--checkpoint", tta.checkpoint, "trained checkpoint")->required();
  tta_cmd->add_option("--input-volume", tta.input_volume, "volume supplying input slices")
      ->required();
  tta_cmd->add_option("--slice-indices", tta.slice_indices, "1-based depth indices")
      ->required()
      ->delimiter(',');
  tta_cmd->add_option("--transforms", tta.transforms, "identity,flips,rot90,scale")
      ->required()
      ->delimiter(',');
  tta_cmd->add_option("--n-views", tta.n_views, "azimuth views per transform");
  tta_cmd->add_option("--eta", tta.eta, "DDIM eta");
  tta_cmd->add_option("--steps", tta.steps, "sampler steps");
  tta_cmd->add_option("--seed", tta.seed, "random seed");
  tta_cmd->add_option("--out", tta.out, "output volume path")->required();

  ActiveSelectArgs act;
  auto* act_cmd = app.add_subcommand("active-select", "greedy test-time slice selection");
  act_cmd->add_option("--checkpoint", act.checkpoint, "trained checkpoint")->required();
  act_cmd->add_option("--target-volume", act.target_volume, "volume to explain")->required();
  act_cmd->add_option("--budget", act.budget, "number of slices to pick")->required();
  act_cmd->add_option("--candidate-stride", act.candidate_stride, "stride over depth candidates");
  act_cmd->add_option("--n-views", act.n_views, "views per evaluation");
  act_cmd->add_option("--eta", act.eta, "DDIM eta");
  act_cmd->add_option("--steps", act.steps, "sampler steps");
  act_cmd->add_option("--seed", act.seed, "random seed");
  act_cmd->add_option("--out-csv", act.out_csv, "per-round CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints to the right stream
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) cmd_synth(synth, std::cout);
    if (train_cmd->parsed()) cmd_train(load_run_config(config_path), std::cerr);
    if (rec_cmd->parsed()) cmd_reconstruct(rec);
    if (ev_cmd->parsed()) cmd_evaluate(ev, std::cout);
    if (sweep_cmd->parsed()) cmd_sweep(sweep, std::cerr);
    if (tta_cmd->parsed()) cmd_tta(tta);
    if (act_cmd->parsed()) cmd_active_select(act, std::cout);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace xdiff::cli
