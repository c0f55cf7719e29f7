// scenefill: flow-guided video inpainting via a jointly estimated scene
// template and per-frame warps.
//
// Subcommands: inpaint, estimate-mask, eval, synth. Sequences are numbered
// PNGs; masks are same-named binary PNGs (nonzero = masked).

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scenefill/image_io.hpp"
#include "scenefill/inpaint.hpp"
#include "scenefill/metrics.hpp"
#include "scenefill/scene_template.hpp"
#include "scenefill/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scenefill;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct CliError : std::runtime_error {
  int code;
  CliError(int c, std::string msg) : std::runtime_error(std::move(msg)),
                                     code(c) {}
};

struct RunConfig {
  std::string input_dir, mask_dir, output_dir;
  std::string mode = "full";  // full | sliding
  int window = 7;
  std::string key_frame = "middle";
  double beta = 0.05;
  double alpha = 0.1;
  std::string flow_cache_dir;
  int threads = 1;
};

void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CliError(kExitInput, "cannot read config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw CliError(kExitInput, std::string("bad config JSON: ") + e.what());
  }
  auto get = [&](const char* k, auto& field) {
    if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
  };
  get("input_dir", c.input_dir);
  get("mask_dir", c.mask_dir);
  get("output_dir", c.output_dir);
  get("mode", c.mode);
  get("window", c.window);
  get("key_frame", c.key_frame);
  get("beta", c.beta);
  get("alpha", c.alpha);
  get("flow_cache_dir", c.flow_cache_dir);
  get("threads", c.threads);
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw CliError(kExitInput, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png")
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Frame> load_frames(const std::vector<fs::path>& paths) {
  std::vector<Frame> frames;
  for (const auto& p : paths) {
    try {
      frames.push_back(read_png(p));
    } catch (const IoError& e) {
      throw CliError(kExitIo, e.what());
    }
  }
  return frames;
}

int resolve_key_frame(const std::string& s, int T) {
  if (s == "middle") return T / 2;
  try {
    const int k = std::stoi(s);
    if (k < 0 || k >= T) throw CliError(kExitInput, "key_frame out of range");
    return k;
  } catch (const std::invalid_argument&) {
    throw CliError(kExitInput, "bad key_frame: " + s);
  }
}

JointParams make_joint_params(const RunConfig& cfg) {
  JointParams jp;
  jp.threads = std::max(1, cfg.threads);
  if (!cfg.flow_cache_dir.empty()) {
    fs::create_directories(cfg.flow_cache_dir);
    jp.flow_cache_dir = fs::path(cfg.flow_cache_dir);
  }
  return jp;
}

// Stage-then-rename so error paths never leave partial outputs behind.
class StagedDir {
 public:
  explicit StagedDir(fs::path final_dir)
      : final_(std::move(final_dir)),
        stage_(final_.string() + ".staging") {
    std::error_code ec;
    fs::remove_all(stage_, ec);
    fs::create_directories(stage_);
  }
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(stage_, ec);
    }
  }
  const fs::path& path() const { return stage_; }
  void commit() {
    fs::create_directories(final_);
    for (const auto& e : fs::directory_iterator(stage_))
      fs::rename(e.path(), final_ / e.path().filename());
    fs::remove_all(stage_);
    committed_ = true;
  }

 private:
  fs::path final_, stage_;
  bool committed_ = false;
};

void write_template_png(const fs::path& path, const SceneTemplate& tpl) {
  Frame img = Frame::zeros(tpl.domain.width, tpl.domain.height, 3);
  for (int y = 0; y < tpl.domain.height; ++y)
    for (int x = 0; x < tpl.domain.width; ++x) {
      if (tpl.defined(y, x)) {
        for (int c = 0; c < 3; ++c)
          img.ch[c](y, x) =
              tpl.radiance[std::min(c, tpl.channels() - 1)](y, x);
      } else {  // magenta
        img.ch[0](y, x) = 1;
        img.ch[1](y, x) = 0;
        img.ch[2](y, x) = 1;
      }
    }
  write_png(path, img);
}

struct SequenceInputs {
  std::vector<fs::path> frame_paths;
  std::vector<Frame> frames;
  std::vector<Mask> masks;
};

SequenceInputs load_sequence(const RunConfig& cfg) {
  SequenceInputs in;
  in.frame_paths = list_pngs(cfg.input_dir);
  if (in.frame_paths.empty())
    throw CliError(kExitInput, "no input frames in " + cfg.input_dir);
  in.frames = load_frames(in.frame_paths);
  for (size_t i = 0; i < in.frame_paths.size(); ++i) {
    const fs::path mp = fs::path(cfg.mask_dir) / in.frame_paths[i].filename();
    if (!fs::exists(mp))
      throw CliError(kExitInput, "missing mask file: " + mp.string());
    Mask m;
    try {
      m = read_mask_png(mp);
    } catch (const IoError& e) {
      throw CliError(kExitIo, e.what());
    }
    if (m.width != in.frames[i].width || m.height != in.frames[i].height)
      throw CliError(kExitInput,
                     "mask geometry mismatch: " + mp.string());
    in.masks.push_back(std::move(m));
  }
  return in;
}

void run_inpaint_pipeline(const RunConfig& cfg, SequenceInputs& in) {
  const auto t0 = std::chrono::steady_clock::now();
  const int T = static_cast<int>(in.frames.size());
  JointParams jp = make_joint_params(cfg);
  InpaintParams ip;
  ip.beta = cfg.beta;
  ip.alpha = cfg.alpha;

  std::vector<Frame> out_frames;
  std::vector<long> unfilled(T, 0);
  std::optional<SceneTemplate> tpl;

  if (cfg.mode == "sliding") {
    if (cfg.window < 2) throw CliError(kExitInput, "window must be >= 2");
    SlidingResult res =
        sliding_window_run(in.frames, in.masks, cfg.window, jp, ip);
    out_frames = std::move(res.frames);
    unfilled = std::move(res.unfilled_counts);
    // Final template snapshot for template.png: one joint pass over the
    // last window.
    const int w0 = std::max(0, T - cfg.window);
    std::vector<Frame> wf(in.frames.begin() + w0, in.frames.end());
    std::vector<Mask> wm(in.masks.begin() + w0, in.masks.end());
    tpl = run_joint_optimization(wf, wm, static_cast<int>(wf.size()) / 2, jp)
              .tpl;
  } else if (cfg.mode == "full") {
    const int key = resolve_key_frame(cfg.key_frame, T);
    InferenceState st = run_joint_optimization(in.frames, in.masks, key, jp);
    for (int t = 0; t < T; ++t) {
      InpaintResult r = inpaint_frame(st, t, ip);
      unfilled[t] = r.unfilled.count();
      if (unfilled[t] > 0 &&
          unfilled[t] < static_cast<long>(r.frame.width) * r.frame.height) {
        Mask holes = Mask::empty(r.frame.width, r.frame.height);
        holes.data = r.unfilled;
        r.frame = diffusion_fill(r.frame, holes);
      }
      out_frames.push_back(std::move(r.frame));
    }
    tpl = std::move(st.tpl);
  } else {
    throw CliError(kExitInput, "unknown mode: " + cfg.mode);
  }

  const auto t1 = std::chrono::steady_clock::now();
  StagedDir staged{fs::path(cfg.output_dir)};
  for (int t = 0; t < T; ++t)
    write_png(staged.path() / in.frame_paths[t].filename(), out_frames[t]);
  if (tpl) write_template_png(staged.path() / "template.png", *tpl);

  json run;
  run["mode"] = cfg.mode;
  run["window"] = cfg.window;
  run["key_frame"] = cfg.key_frame;
  run["beta"] = cfg.beta;
  run["alpha"] = cfg.alpha;
  run["threads"] = cfg.threads;
  run["elapsed_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  run["unfilled_pixels"] = unfilled;
  std::ofstream(staged.path() / "run.json") << run.dump(2) << "\n";
  staged.commit();
}

int cmd_inpaint(const RunConfig& cfg) {
  SequenceInputs in = load_sequence(cfg);
  run_inpaint_pipeline(cfg, in);
  return kExitOk;
}

int cmd_estimate_mask(const RunConfig& cfg) {
  SequenceInputs in;
  in.frame_paths = list_pngs(cfg.input_dir);
  if (in.frame_paths.empty())
    throw CliError(kExitInput, "no input frames in " + cfg.input_dir);
  in.frames = load_frames(in.frame_paths);
  const int T = static_cast<int>(in.frames.size());

  std::vector<bool> annotated(T, false);
  in.masks.resize(T);
  int n_annotated = 0;
  for (int i = 0; i < T; ++i) {
    const fs::path mp = fs::path(cfg.mask_dir) / in.frame_paths[i].filename();
    if (fs::exists(mp)) {
      try {
        in.masks[i] = read_mask_png(mp);
      } catch (const IoError& e) {
        throw CliError(kExitIo, e.what());
      }
      annotated[i] = true;
      ++n_annotated;
    } else {
      in.masks[i] = Mask::empty(in.frames[i].width, in.frames[i].height);
    }
  }
  if (n_annotated == 0)
    throw CliError(kExitInput, "estimate-mask: no annotated mask files");

  JointParams jp = make_joint_params(cfg);

  // Warps for every frame; the template is accumulated from the annotated
  // frames only.
  const AdjacentFlows adj = compute_adjacent_flows(in.frames, in.masks, jp);
  std::vector<int> ann_idx;
  for (int i = 0; i < T; ++i)
    if (annotated[i]) ann_idx.push_back(i);
  const int key = ann_idx[ann_idx.size() / 2];
  auto [wk, wik] = chain_from_key(adj, key);

  std::vector<Frame> ann_frames;
  std::vector<Mask> ann_masks;
  std::vector<WarpField> ann_warps;
  for (int i : ann_idx) {
    ann_frames.push_back(in.frames[i]);
    ann_masks.push_back(in.masks[i]);
    ann_warps.push_back(wk[i]);
  }
  const SceneTemplate tpl =
      accumulate_template(ann_frames, ann_masks, ann_warps);

  StagedDir staged{fs::path(cfg.output_dir)};
  for (int i = 0; i < T; ++i) {
    if (annotated[i]) continue;
    in.masks[i] = estimate_mask(in.frames[i], tpl, wik[i], cfg.alpha);
    fs::path name = in.frame_paths[i].stem();
    name += "_est.png";
    write_mask_png(staged.path() / name, in.masks[i]);
  }
  staged.commit();

  run_inpaint_pipeline(cfg, in);
  return kExitOk;
}

int cmd_eval(const std::string& result_dir, const std::string& gt_dir,
             const std::string& mask_dir, const std::string& report_path) {
  // Pair result and ground-truth frames by filename so auxiliary files in
  // either directory (template snapshots, reports) are ignored.
  std::map<std::string, fs::path> by_name;
  for (const auto& p : list_pngs(gt_dir)) by_name[p.filename().string()] = p;
  std::vector<fs::path> rp, gp;
  for (const auto& p : list_pngs(result_dir)) {
    const auto it = by_name.find(p.filename().string());
    if (it == by_name.end()) continue;
    rp.push_back(p);
    gp.push_back(it->second);
  }
  if (rp.empty())
    throw CliError(kExitInput, "eval: no common frame filenames");
  std::vector<Frame> res = load_frames(rp);
  std::vector<Frame> gt = load_frames(gp);

  std::vector<Mask> masks;
  for (size_t i = 0; i < rp.size(); ++i) {
    const fs::path mp = fs::path(mask_dir) / rp[i].filename();
    masks.push_back(fs::exists(mp)
                        ? read_mask_png(mp)
                        : Mask::empty(res[i].width, res[i].height));
  }

  std::vector<Mask> empty;
  for (const auto& f : gt) empty.push_back(Mask::empty(f.width, f.height));
  JointParams jp;
  AdjacentFlows adj = compute_adjacent_flows(gt, empty, jp);

  const MetricReport rep = evaluate_sequence(res, gt, masks, adj.fwd);
  std::ofstream(report_path) << rep.to_json() << "\n";
  std::cout << "frames: " << rep.per_frame.size() << "\n";
  std::cout << "PSNR:  " << rep.mean_psnr << " dB\n";
  std::cout << "SSIM:  " << rep.mean_ssim << "\n";
  if (rep.temporal) {
    std::cout << "TPSNR: " << rep.temporal->tpsnr << " dB\n";
    std::cout << "TSSIM: " << rep.temporal->tssim << "\n";
  } else {
    std::cout << "TPSNR: n/a\nTSSIM: n/a\n";
  }
  return kExitOk;
}

WarpSpec parse_warp_spec(const json& j) {
  WarpSpec w;
  const std::string kind = j.value("kind", "translation");
  if (kind == "translation")
    w.kind = WarpSpec::Kind::Translation;
  else if (kind == "rotation")
    w.kind = WarpSpec::Kind::Rotation;
  else if (kind == "zoom")
    w.kind = WarpSpec::Kind::Zoom;
  else if (kind == "affine")
    w.kind = WarpSpec::Kind::Affine;
  else
    throw CliError(kExitInput, "synth: bad warp.kind: " + kind);
  if (j.contains("velocity"))
    w.velocity = {j["velocity"][0].get<double>(),
                  j["velocity"][1].get<double>()};
  w.angular_rate = j.value("angular_rate", 0.0);
  w.zoom_rate = j.value("zoom_rate", 1.0);
  if (j.contains("affine_step")) {
    const auto& m = j["affine_step"];
    w.affine_step << m[0][0].get<double>(), m[0][1].get<double>(),
        m[1][0].get<double>(), m[1][1].get<double>();
    if (w.affine_step.determinant() <= 0)
      throw CliError(kExitInput, "synth: affine_step determinant must be > 0");
  }
  return w;
}

MaskSpec parse_mask_spec(const json& j) {
  MaskSpec m;
  const std::string shape = j.value("shape", "box");
  if (shape == "box")
    m.shape = MaskSpec::Shape::Box;
  else if (shape == "disk")
    m.shape = MaskSpec::Shape::Disk;
  else
    throw CliError(kExitInput, "synth: bad mask.shape: " + shape);
  if (j.contains("center"))
    m.center0 = {j["center"][0].get<double>(), j["center"][1].get<double>()};
  if (j.contains("velocity"))
    m.velocity = {j["velocity"][0].get<double>(),
                  j["velocity"][1].get<double>()};
  m.size = j.value("size", 0.0);
  if (j.contains("active")) {
    m.active_begin = j["active"][0].get<int>();
    m.active_end = j["active"][1].get<int>();
  }
  return m;
}

int cmd_synth(const std::string& spec_file, const std::string& out_dir) {
  std::ifstream f(spec_file);
  if (!f) throw CliError(kExitInput, "cannot read spec file: " + spec_file);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw CliError(kExitInput, std::string("bad spec JSON: ") + e.what());
  }

  const int T = j.value("T", 7);
  if (T < 1) throw CliError(kExitInput, "synth: bad field T");
  const double noise = j.value("noise_sigma", 0.0);
  const uint64_t seed = j.value("seed", 1u);
  const int out_w = j.value("out_width", 128);
  const int out_h = j.value("out_height", 128);

  Frame tpl_img;
  const json tj = j.value("template", json::object());
  const std::string tkind = tj.value("kind", "texture");
  const int tw = tj.value("width", 256), th = tj.value("height", 256);
  const int tk = tj.value("channels", 1);
  if (tkind == "texture")
    tpl_img = make_texture(tw, th, tk, tj.value("seed", seed));
  else if (tkind == "checkerboard")
    tpl_img = make_checkerboard(tw, th, tk, tj.value("cell", 8));
  else if (tkind == "file")
    tpl_img = read_png(tj.value("path", ""));
  else
    throw CliError(kExitInput, "synth: bad template.kind");

  WarpSpec ws = parse_warp_spec(j.value("warp", json::object()));
  MaskSpec ms = parse_mask_spec(j.value("mask", json::object()));

  SynthSequence seq;
  try {
    seq = generate(tpl_img, ws, ms, T, noise, seed, out_w, out_h);
  } catch (const std::invalid_argument& e) {
    throw CliError(kExitInput, std::string("synth: ") + e.what());
  }

  StagedDir staged{fs::path(out_dir)};
  fs::create_directories(staged.path() / "frames");
  fs::create_directories(staged.path() / "masks");
  fs::create_directories(staged.path() / "gt");
  fs::create_directories(staged.path() / "flo");
  char name[32];
  for (int i = 0; i < T; ++i) {
    std::snprintf(name, sizeof(name), "%06d.png", i);
    write_png(staged.path() / "frames" / name, seq.frames[i]);
    write_mask_png(staged.path() / "masks" / name, seq.masks[i]);
    write_png(staged.path() / "gt" / name, seq.gt_frames[i]);
    if (i + 1 < T) {
      std::snprintf(name, sizeof(name), "flow_%06d_%06d.flo", i, i + 1);
      write_flo(staged.path() / "flo" / name, analytic_warp(seq, i, i + 1));
    }
  }
  std::ofstream(staged.path() / "manifest.json") << j.dump(2) << "\n";
  staged.commit();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene-template video inpainting"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON config file");
    sub->add_option("--input-dir", cfg.input_dir);
    sub->add_option("--mask-dir", cfg.mask_dir);
    sub->add_option("--output-dir", cfg.output_dir);
    sub->add_option("--mode", cfg.mode, "full | sliding");
    sub->add_option("--window", cfg.window);
    sub->add_option("--key-frame", cfg.key_frame);
    sub->add_option("--beta", cfg.beta);
    sub->add_option("--alpha", cfg.alpha);
    sub->add_option("--flow-cache-dir", cfg.flow_cache_dir);
    sub->add_option("--threads", cfg.threads);
  };

  CLI::App* inpaint = app.add_subcommand("inpaint", "inpaint a sequence");
  add_common(inpaint);
  CLI::App* est = app.add_subcommand(
      "estimate-mask", "estimate missing masks, then inpaint");
  add_common(est);

  std::string result_dir, gt_dir, eval_mask_dir, report_path = "report.json";
  CLI::App* eval = app.add_subcommand("eval", "PSNR/SSIM/TPSNR/TSSIM report");
  eval->add_option("--result-dir", result_dir)->required();
  eval->add_option("--gt-dir", gt_dir)->required();
  eval->add_option("--mask-dir", eval_mask_dir);
  eval->add_option("--report", report_path);

  std::string spec_file, synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic sequence");
  synth->add_option("--spec", spec_file)->required();
  synth->add_option("--out-dir", synth_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(inpaint) || app.got_subcommand(est)) {
      if (!config_file.empty()) {
        RunConfig file_cfg;
        apply_config_file(file_cfg, config_file);
        // Flags override file values.
        auto pick = [&](const char* flag, auto& target, const auto& from_file) {
          CLI::App* sub = app.got_subcommand(inpaint) ? inpaint : est;
          if (sub->count(flag) == 0) target = from_file;
        };
        pick("--input-dir", cfg.input_dir, file_cfg.input_dir);
        pick("--mask-dir", cfg.mask_dir, file_cfg.mask_dir);
        pick("--output-dir", cfg.output_dir, file_cfg.output_dir);
        pick("--mode", cfg.mode, file_cfg.mode);
        pick("--window", cfg.window, file_cfg.window);
        pick("--key-frame", cfg.key_frame, file_cfg.key_frame);
        pick("--beta", cfg.beta, file_cfg.beta);
        pick("--alpha", cfg.alpha, file_cfg.alpha);
        pick("--flow-cache-dir", cfg.flow_cache_dir, file_cfg.flow_cache_dir);
        pick("--threads", cfg.threads, file_cfg.threads);
      }
      if (cfg.input_dir.empty() || cfg.mask_dir.empty() ||
          cfg.output_dir.empty())
        throw CliError(kExitInput,
                       "input-dir, mask-dir, and output-dir are required");
      return app.got_subcommand(inpaint) ? cmd_inpaint(cfg)
                                         : cmd_estimate_mask(cfg);
    }
    if (app.got_subcommand(eval))
      return cmd_eval(result_dir, gt_dir, eval_mask_dir, report_path);
    if (app.got_subcommand(synth)) return cmd_synth(spec_file, synth_out);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
