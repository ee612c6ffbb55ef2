#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>

#include "vstream/attention.hpp"
#include "vstream/baselines.hpp"
#include "vstream/env.hpp"
#include "vstream/experiment.hpp"
#include "vstream/fixtures.hpp"
#include "vstream/manifest.hpp"
#include "vstream/mappo.hpp"
#include "vstream/partition.hpp"
#include "vstream/qoe.hpp"
#include "vstream/sphere.hpp"
#include "vstream/trace.hpp"

namespace py = pybind11;
using namespace vstream;

namespace {

Vec3 to_vec(const std::array<double, 3>& a) { return Vec3{a[0], a[1], a[2]}; }

std::array<double, 3> from_vec(const Vec3& v) { return {v.x, v.y, v.z}; }

std::vector<Vec3> to_vecs(const std::vector<std::array<double, 3>>& pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(to_vec(p));
  return out;
}

std::vector<std::array<double, 3>> from_vecs(const std::vector<Vec3>& pts) {
  std::vector<std::array<double, 3>> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(from_vec(p));
  return out;
}

Mat to_mat(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Mat();
  Mat m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw std::invalid_argument("ragged matrix");
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return m;
}

std::vector<std::vector<double>> from_mat(const Mat& m) {
  std::vector<std::vector<double>> out(m.rows, std::vector<double>(m.cols));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

PYBIND11_MODULE(vstream, m) {
  m.doc() = "Tile-based 360 video streaming lab: media model, viewpoint prediction, "
            "QoE arithmetic, Dec-POMDP environment, MAPPO/IPPO, and baselines";

  // --- media model ---------------------------------------------------------
  py::class_<VideoManifest>(m, "VideoManifest")
      .def_readonly("rows", &VideoManifest::rows)
      .def_readonly("cols", &VideoManifest::cols)
      .def_readonly("segments", &VideoManifest::segments)
      .def_readonly("segment_duration_s", &VideoManifest::segment_duration_s)
      .def_readonly("ladder_mbps", &VideoManifest::ladder_mbps)
      .def_property_readonly("tiles", &VideoManifest::tiles)
      .def_property_readonly("rungs", &VideoManifest::rungs)
      .def("tile_size_mb",
           [](const VideoManifest& mf, int segment, int tile, int rung) {
             if (segment < 0 || segment >= mf.segments || tile < 0 || tile >= mf.tiles() ||
                 rung < 0 || rung >= mf.rungs())
               throw std::out_of_range("tile_size_mb: index out of range");
             return mf.tile_sizes[segment][tile][rung];
           });

  m.def("load_manifest", &load_manifest, py::arg("path"));
  m.def("save_manifest", &save_manifest, py::arg("manifest"), py::arg("path"));
  m.def("generate_manifest", &generate_manifest, py::arg("seed") = 7, py::arg("rows") = 6,
        py::arg("cols") = 12, py::arg("segments") = 60, py::arg("segment_duration_s") = 1.0,
        py::arg("ladder_mbps") = std::vector<double>{1.0, 2.5, 5.0, 8.0, 16.0, 35.0});
  m.def("segment_size_mb", &segment_size_mb, py::arg("manifest"), py::arg("segment"),
        py::arg("rung_per_tile"));
  m.def("region_size_mb", &region_size_mb, py::arg("manifest"), py::arg("segment"),
        py::arg("region_tiles"), py::arg("rung"));

  py::class_<NetworkTrace>(m, "NetworkTrace")
      .def_readonly("times_s", &NetworkTrace::times_s)
      .def_readonly("throughput_mbps", &NetworkTrace::throughput_mbps)
      .def_readonly("offset_mbps", &NetworkTrace::offset_mbps)
      .def("throughput_at", &NetworkTrace::throughput_at, py::arg("t_s"));

  m.def("load_trace", &load_trace, py::arg("path"), py::arg("offset_mbps") = 0.0);
  m.def("make_trace", &make_trace, py::arg("times_s"), py::arg("throughput_mbps"),
        py::arg("offset_mbps") = 0.0);
  m.def("download_time", &download_time, py::arg("size_mb"), py::arg("trace"),
        py::arg("start_s"));

  // --- sphere / prediction -------------------------------------------------
  py::class_<Codebook>(m, "Codebook")
      .def_property_readonly("centroids",
                             [](const Codebook& cb) { return from_vecs(cb.centroids); })
      .def_property_readonly("size", &Codebook::size);

  py::class_<PredictionSet>(m, "PredictionSet")
      .def_readonly("probabilities", &PredictionSet::probabilities)
      .def_property_readonly("trajectories", [](const PredictionSet& ps) {
        std::vector<std::vector<std::array<double, 3>>> out;
        for (const auto& traj : ps.trajectories) out.push_back(from_vecs(traj));
        return out;
      });

  m.def("great_circle_distance",
        [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
          return great_circle_distance(to_vec(a), to_vec(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("avg_great_circle_distance",
        [](const std::vector<std::array<double, 3>>& pred,
           const std::vector<std::array<double, 3>>& truth) {
          return avg_great_circle_distance(to_vecs(pred), to_vecs(truth));
        },
        py::arg("pred"), py::arg("truth"));
  m.def("best_of_many",
        [](const PredictionSet& preds, const std::vector<std::array<double, 3>>& truth) {
          return best_of_many(preds, to_vecs(truth));
        },
        py::arg("predictions"), py::arg("truth"));
  m.def("kmeans_fit",
        [](const std::vector<std::array<double, 3>>& points, int k, uint64_t seed) {
          return kmeans_fit(to_vecs(points), k, seed);
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 1);
  m.def("quantize",
        [](const std::array<double, 3>& p, const Codebook& cb) {
          return quantize(to_vec(p), cb);
        },
        py::arg("point"), py::arg("codebook"));
  m.def("baseline_predict",
        [](const std::vector<std::array<double, 3>>& history, int horizon, int count) {
          return baseline_predict(to_vecs(history), horizon, count);
        },
        py::arg("history"), py::arg("horizon"), py::arg("num_trajectories"));
  m.def("load_codebook", &load_codebook, py::arg("path"));
  m.def("save_codebook", &save_codebook, py::arg("codebook"), py::arg("path"));

  m.def("spatial_attention",
        [](const std::vector<std::vector<double>>& q, const std::vector<std::vector<double>>& k,
           double d_k) { return from_mat(spatial_attention(to_mat(q), to_mat(k), d_k)); },
        py::arg("queries"), py::arg("keys"), py::arg("d_k"));
  m.def("temporal_attention",
        [](const std::vector<std::vector<double>>& q, const std::vector<std::vector<double>>& k,
           double d_k) { return from_mat(temporal_attention(to_mat(q), to_mat(k), d_k)); },
        py::arg("queries"), py::arg("keys"), py::arg("d_k"));

  py::class_<AttentionConfig>(m, "AttentionConfig")
      .def(py::init<>())
      .def_readwrite("frame_h", &AttentionConfig::frame_h)
      .def_readwrite("frame_w", &AttentionConfig::frame_w)
      .def_readwrite("frame_c", &AttentionConfig::frame_c)
      .def_readwrite("patch_h", &AttentionConfig::patch_h)
      .def_readwrite("patch_w", &AttentionConfig::patch_w)
      .def_readwrite("frames", &AttentionConfig::frames)
      .def_readwrite("history", &AttentionConfig::history)
      .def_readwrite("horizon", &AttentionConfig::horizon)
      .def_readwrite("classes", &AttentionConfig::classes)
      .def_readwrite("embed_dim", &AttentionConfig::embed_dim)
      .def_readwrite("heads", &AttentionConfig::heads)
      .def_readwrite("spatial_blocks", &AttentionConfig::spatial_blocks)
      .def_readwrite("temporal_blocks", &AttentionConfig::temporal_blocks)
      .def_readwrite("viewpoint_blocks", &AttentionConfig::viewpoint_blocks)
      .def_readwrite("decoder_blocks", &AttentionConfig::decoder_blocks)
      .def_readwrite("ffn_hidden", &AttentionConfig::ffn_hidden)
      .def_readwrite("seed", &AttentionConfig::seed);

  py::class_<AttentionModel>(m, "AttentionModel")
      .def(py::init<AttentionConfig>(), py::arg("config"))
      .def_property_readonly("parameter_count",
                             [](const AttentionModel& model) {
                               return model.params().scalar_count();
                             })
      .def("forward",
           [](AttentionModel& model, const std::vector<std::vector<std::vector<double>>>& frames,
              const std::vector<int>& history) {
             std::vector<Mat> fm;
             for (const auto& f : frames) fm.push_back(to_mat(f));
             return from_mat(model.forward(fm, history));
           },
           py::arg("frames"), py::arg("history"))
      .def("train_step",
           [](AttentionModel& model,
              const std::vector<std::tuple<std::vector<std::vector<std::vector<double>>>,
                                           std::vector<int>, std::vector<int>>>& batch,
              double lr) {
             std::vector<TrainingSample> samples;
             for (const auto& [frames, history, targets] : batch) {
               TrainingSample s;
               for (const auto& f : frames) s.frames.push_back(to_mat(f));
               s.history = history;
               s.targets = targets;
               samples.push_back(std::move(s));
             }
             return model.train_step(samples, lr);
           },
           py::arg("batch"), py::arg("learning_rate"))
      .def("predict",
           [](AttentionModel& model, const std::vector<std::vector<std::vector<double>>>& frames,
              const std::vector<int>& history, int top_i, const Codebook& cb) {
             std::vector<Mat> fm;
             for (const auto& f : frames) fm.push_back(to_mat(f));
             return model.predict(fm, history, top_i, cb);
           },
           py::arg("frames"), py::arg("history"), py::arg("top_i"), py::arg("codebook"))
      .def("save", &AttentionModel::save, py::arg("path"))
      .def("load", &AttentionModel::load, py::arg("path"));

  m.def("top_i_decode",
        [](const std::function<std::vector<double>(const std::vector<int>&)>& step, int top_i,
           const Codebook& cb, int horizon) { return top_i_decode(step, top_i, cb, horizon); },
        py::arg("step_fn"), py::arg("top_i"), py::arg("codebook"), py::arg("horizon"));

  // --- partition -----------------------------------------------------------
  py::class_<TileGrid>(m, "TileGrid")
      .def(py::init([](int rows, int cols) { return TileGrid{rows, cols}; }), py::arg("rows"),
           py::arg("cols"))
      .def_readonly("rows", &TileGrid::rows)
      .def_readonly("cols", &TileGrid::cols);

  py::class_<Fov>(m, "Fov")
      .def(py::init([](double h, double v) { return Fov{h, v}; }), py::arg("h_deg"),
           py::arg("v_deg"))
      .def_readonly("h_deg", &Fov::h_deg)
      .def_readonly("v_deg", &Fov::v_deg);

  py::class_<RegionAssignment>(m, "RegionAssignment")
      .def_readonly("regions", &RegionAssignment::regions)
      .def_readonly("probabilities", &RegionAssignment::probabilities)
      .def_readonly("rest", &RegionAssignment::rest)
      .def_readonly("segment", &RegionAssignment::segment);

  m.def("viewport_tiles",
        [](const std::array<double, 3>& vp, const TileGrid& grid, const Fov& fov) {
          return viewport_tiles(to_vec(vp), grid, fov);
        },
        py::arg("viewpoint"), py::arg("grid"), py::arg("fov"));
  m.def("make_prediction_set",
        [](const std::vector<std::vector<std::array<double, 3>>>& trajectories,
           const std::vector<double>& probabilities) {
          PredictionSet ps;
          for (const auto& t : trajectories) ps.trajectories.push_back(to_vecs(t));
          ps.probabilities = probabilities;
          ps.validate();
          return ps;
        },
        py::arg("trajectories"), py::arg("probabilities"));
  m.def("partition", &partition, py::arg("predictions"), py::arg("grid"), py::arg("fov"));

  // --- qoe -------------------------------------------------------------------
  py::class_<QoEWeights>(m, "QoEWeights")
      .def(py::init<>())
      .def_static("preset", &QoEWeights::preset, py::arg("name"))
      .def_readwrite("quality", &QoEWeights::quality)
      .def_readwrite("temporal_penalty", &QoEWeights::temporal_penalty)
      .def_readwrite("spatial_penalty", &QoEWeights::spatial_penalty)
      .def_readwrite("rebuffer_penalty", &QoEWeights::rebuffer_penalty)
      .def_readwrite("signed_variation", &QoEWeights::signed_variation);

  py::class_<QoEBreakdown>(m, "QoEBreakdown")
      .def_readonly("viewport_quality", &QoEBreakdown::viewport_quality)
      .def_readonly("temporal_variation", &QoEBreakdown::temporal_variation)
      .def_readonly("spatial_variation", &QoEBreakdown::spatial_variation)
      .def_readonly("rebuffer_s", &QoEBreakdown::rebuffer_s)
      .def_readonly("total", &QoEBreakdown::total);

  m.def("viewport_quality", &viewport_quality, py::arg("psi"), py::arg("quality"));
  m.def("temporal_variation", &temporal_variation, py::arg("psi"), py::arg("q_now"),
        py::arg("q_prev"), py::arg("signed_variation") = false);
  m.def("spatial_variation", &spatial_variation, py::arg("psi"), py::arg("quality"),
        py::arg("signed_variation") = false);
  m.def("rebuffer_time", &rebuffer_time, py::arg("download_time_s"), py::arg("buffer_s"),
        py::arg("segment_duration_s"));
  m.def("qoe_total",
        [](const QoEWeights& w, const std::vector<double>& psi, const std::vector<double>& q,
           const std::optional<std::vector<double>>& q_prev, double rebuffer_s) {
          return qoe_total(w, psi, q, q_prev, rebuffer_s);
        },
        py::arg("weights"), py::arg("psi"), py::arg("quality"), py::arg("q_prev") = py::none(),
        py::arg("rebuffer_s") = 0.0);

  // --- environment -----------------------------------------------------------
  py::class_<PredictorConfig>(m, "PredictorConfig")
      .def(py::init<>())
      .def_property(
          "kind",
          [](const PredictorConfig& pc) {
            switch (pc.kind) {
              case PredictorConfig::Kind::OracleLog: return std::string("oracle-log");
              case PredictorConfig::Kind::Baseline: return std::string("baseline");
              case PredictorConfig::Kind::Model: return std::string("model");
            }
            return std::string("?");
          },
          [](PredictorConfig& pc, const std::string& kind) {
            if (kind == "oracle-log")
              pc.kind = PredictorConfig::Kind::OracleLog;
            else if (kind == "baseline")
              pc.kind = PredictorConfig::Kind::Baseline;
            else if (kind == "model")
              pc.kind = PredictorConfig::Kind::Model;
            else
              throw std::invalid_argument("predictor kind must be oracle-log, baseline or model");
          })
      .def_readwrite("oracle_log_path", &PredictorConfig::oracle_log_path)
      .def_readwrite("viewpoint_log_path", &PredictorConfig::viewpoint_log_path)
      .def_readwrite("checkpoint_path", &PredictorConfig::checkpoint_path)
      .def_readwrite("codebook_path", &PredictorConfig::codebook_path)
      .def_readwrite("model", &PredictorConfig::model);

  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("manifest", &EnvConfig::manifest)
      .def_readwrite("trace", &EnvConfig::trace)
      .def_readwrite("weights", &EnvConfig::weights)
      .def_readwrite("agents", &EnvConfig::agents)
      .def_readwrite("history_len", &EnvConfig::history_len)
      .def_readwrite("max_buffer_s", &EnvConfig::max_buffer_s)
      .def_readwrite("fov", &EnvConfig::fov)
      .def_readwrite("seed", &EnvConfig::seed)
      .def_readwrite("predictor", &EnvConfig::predictor);

  py::class_<QoERow>(m, "QoERow")
      .def_readonly("segment", &QoERow::segment)
      .def_readonly("actions", &QoERow::actions)
      .def_readonly("rest_rung", &QoERow::rest_rung)
      .def_readonly("psi", &QoERow::psi)
      .def_readonly("quality", &QoERow::quality)
      .def_readonly("qoe", &QoERow::qoe)
      .def_readonly("buffer_before_s", &QoERow::buffer_before_s)
      .def_readonly("buffer_after_s", &QoERow::buffer_after_s)
      .def_readonly("download_s", &QoERow::download_s)
      .def_readonly("rebuffer_s", &QoERow::rebuffer_s)
      .def_readonly("size_mb", &QoERow::size_mb);

  py::class_<Env>(m, "Env")
      .def(py::init<EnvConfig>(), py::arg("config"))
      .def("reset", &Env::reset)
      .def("step",
           [](Env& env, const std::vector<int>& actions, int rest_rung) {
             const StepResult res = env.step(actions, rest_rung);
             return py::make_tuple(res.observations, res.reward, res.qoe, res.done);
           },
           py::arg("actions"), py::arg("rest_rung") = 0)
      .def_property_readonly("done", &Env::done)
      .def_property_readonly("observation_size", &Env::observation_size)
      .def_property_readonly("agents", &Env::agents)
      .def("global_state", &Env::global_state)
      .def("observe", &Env::observe, py::arg("agent"))
      .def_property_readonly("buffer_s", &Env::buffer_s)
      .def_property_readonly("segment_cursor", &Env::segment_cursor)
      .def_property_readonly("current_partition", &Env::current_partition)
      .def("episode_log", &Env::episode_log);

  m.def("freeze_frequency", &freeze_frequency, py::arg("episode_log"));

  // --- madrl math ------------------------------------------------------------
  m.def("discounted_returns", &discounted_returns, py::arg("rewards"),
        py::arg("bootstrap_value"), py::arg("gamma"));
  m.def("gae", &gae, py::arg("rewards"), py::arg("values"), py::arg("bootstrap_value"),
        py::arg("gamma"), py::arg("lambda_"));
  m.def("ppo_clip_objective", &ppo_clip_objective, py::arg("logp_new"), py::arg("logp_old"),
        py::arg("advantages"), py::arg("eps"));
  m.def("critic_loss", &critic_loss, py::arg("values"), py::arg("returns"));

  // --- baselines ---------------------------------------------------------------
  m.def("bb_select", &bb_select, py::arg("buffer_s"), py::arg("num_rungs"),
        py::arg("low_s") = 5.0, py::arg("high_s") = 15.0);
  m.def("rb_select", &rb_select, py::arg("throughput_history_mbps"), py::arg("ladder_mbps"));
  m.def("harmonic_mean", &harmonic_mean, py::arg("values"));

  // --- fixtures ----------------------------------------------------------------
  m.def("generate_fixtures", &generate_fixtures, py::arg("dir"), py::arg("seed") = 7);
  m.def("generate_synthetic_trace", &generate_synthetic_trace, py::arg("seed"),
        py::arg("duration_s"), py::arg("mean_mbps"), py::arg("volatility_mbps"));
}
