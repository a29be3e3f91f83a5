#include "drivegaze/config.hpp"

#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "drivegaze/error.hpp"
#include "drivegaze/io_util.hpp"

namespace drivegaze {

namespace {

using nlohmann::json;

void only_keys(const json& obj, std::string_view section, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object()) {
        throw Error(Errc::InvalidConfig, "config section '" + std::string(section) + "' must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const auto a : allowed) {
            known = known || key == a;
        }
        if (!known) {
            throw Error(Errc::InvalidConfig, "unknown config key '" + std::string(section) + "." + key + "'");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out)
{
    if (const auto it = obj.find(key); it != obj.end()) {
        out = it->get<T>();
    }
}

}  // namespace

PipelineConfig parse_config(std::string_view json_text)
{
    PipelineConfig cfg;
    try {
        const json root = json::parse(json_text);
        only_keys(root, "<root>", {"video", "ransac", "heatmap", "actions", "metrics"});
        if (const auto it = root.find("video"); it != root.end()) {
            only_keys(*it, "video", {"width", "height"});
            read(*it, "width", cfg.width);
            read(*it, "height", cfg.height);
        }
        if (const auto it = root.find("ransac"); it != root.end()) {
            only_keys(*it, "ransac", {"inlier_threshold_px", "confidence", "max_iters", "seed"});
            read(*it, "inlier_threshold_px", cfg.ransac.inlier_threshold_px);
            read(*it, "confidence", cfg.ransac.confidence);
            read(*it, "max_iters", cfg.ransac.max_iters);
            read(*it, "seed", cfg.ransac.seed);
        }
        if (const auto it = root.find("heatmap"); it != root.end()) {
            only_keys(*it, "heatmap", {"sigma_px", "truncate_radius", "window_half"});
            read(*it, "sigma_px", cfg.heatmap.sigma_px);
            if (const auto r = it->find("truncate_radius"); r != it->end() && !r->is_null()) {
                cfg.heatmap.truncate_radius = r->get<int>();
            }
            read(*it, "window_half", cfg.heatmap.window_half);
        }
        if (const auto it = root.find("actions"); it != root.end()) {
            only_keys(*it, "actions",
                      {"stop_speed_kmh", "accel_threshold_ms2", "fps", "median_window", "mean_window",
                       "min_segment_frames"});
            read(*it, "stop_speed_kmh", cfg.actions.stop_speed_kmh);
            read(*it, "accel_threshold_ms2", cfg.actions.accel_threshold_ms2);
            read(*it, "fps", cfg.actions.fps);
            read(*it, "median_window", cfg.actions.median_window);
            read(*it, "mean_window", cfg.actions.mean_window);
            read(*it, "min_segment_frames", cfg.actions.min_segment_frames);
        }
        if (const auto it = root.find("metrics"); it != root.end()) {
            only_keys(*it, "metrics", {"kld_mode", "epsilon"});
            if (const auto m = it->find("kld_mode"); m != it->end()) {
                cfg.metrics.kld_mode = metrics::parse_kld_mode(m->get<std::string>());
            }
            if (const auto e = it->find("epsilon"); e != it->end()) {
                cfg.metrics.epsilon = e->is_string() ? metrics::parse_epsilon(e->get<std::string>()) : e->get<double>();
            }
        }
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::InvalidConfig) {
            throw;
        }
        throw Error(Errc::InvalidConfig, e.what());
    }
    validate(cfg);
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(io::read_file(path)); }

void validate(const PipelineConfig& cfg)
{
    if (cfg.width <= 0 || cfg.height <= 0) {
        throw Error(Errc::InvalidConfig, "video width and height must be positive");
    }
    geometry::validate(cfg.ransac);
    heatmap::validate(cfg.heatmap);
    tasklab::validate(cfg.actions);
    metrics::validate(cfg.metrics);
}

}  // namespace drivegaze
