#include "dronetile/backend.hpp"

#include "dronetile/error.hpp"
#include "text_util.hpp"

#include <opencv2/imgcodecs.hpp>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <random>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace dronetile {

namespace fs = std::filesystem;

// --- subprocess -------------------------------------------------------------------------------

std::vector<Detection> parse_backend_output(std::string_view text, const Source& source,
                                            std::int64_t frame) {
    std::vector<Detection> out;
    std::size_t line_no = 0;
    for (std::string_view raw : split_lines(text)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        const auto f = split_ws(line);
        const std::string where = "backend output line " + std::to_string(line_no) + ": ";
        if (f.size() != 6) throw BackendError(where + "expected `label score x y w h`", std::string(text));
        auto label = parse_label(f[0]);
        if (!label) throw BackendError(where + "unknown label `" + std::string(f[0]) + "`", std::string(text));
        double v[5];
        try {
            for (std::size_t i = 0; i < 5; ++i) v[i] = parse_double(f[i + 1], line_no);
        } catch (const ParseError& e) {
            throw BackendError(where + e.what(), std::string(text));
        }
        if (v[0] < 0.0 || v[0] > 1.0) throw BackendError(where + "score outside [0,1]", std::string(text));
        if (v[3] < 0.0 || v[4] < 0.0) throw BackendError(where + "negative box size", std::string(text));
        Detection d;
        d.box = BoundingBox::from_xywh(v[1], v[2], v[3], v[4]);
        d.label = *label;
        d.score = v[0];
        d.frame = frame;
        d.source = source;
        out.push_back(d);
    }
    return out;
}

namespace {

struct Pipe {
    int fd[2] = {-1, -1};

    Pipe() {
        if (::pipe2(fd, O_CLOEXEC) != 0)
            throw BackendError(std::string("pipe: ") + std::strerror(errno));
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;

    void close_read() {
        if (fd[0] >= 0) ::close(fd[0]);
        fd[0] = -1;
    }
    void close_write() {
        if (fd[1] >= 0) ::close(fd[1]);
        fd[1] = -1;
    }
};

struct SpawnActions {
    posix_spawn_file_actions_t actions;
    SpawnActions() { posix_spawn_file_actions_init(&actions); }
    ~SpawnActions() { posix_spawn_file_actions_destroy(&actions); }
};

}  // namespace

std::vector<Detection> detect_via_subprocess(const std::string& executable,
                                             const std::string& image_path, const Source& source,
                                             std::int64_t frame,
                                             std::chrono::milliseconds timeout) {
    Pipe out_pipe;
    Pipe err_pipe;
    SpawnActions fa;
    posix_spawn_file_actions_adddup2(&fa.actions, out_pipe.fd[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&fa.actions, err_pipe.fd[1], STDERR_FILENO);

    std::vector<char*> argv = {const_cast<char*>(executable.c_str()),
                               const_cast<char*>(image_path.c_str()), nullptr};
    pid_t pid = -1;
    const int rc = ::posix_spawnp(&pid, executable.c_str(), &fa.actions, nullptr, argv.data(), environ);
    if (rc != 0)
        throw BackendError("cannot start `" + executable + "`: " + std::strerror(rc));
    out_pipe.close_write();
    err_pipe.close_write();

    std::string out, err;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    bool timed_out = false;
    pollfd fds[2] = {{out_pipe.fd[0], POLLIN, 0}, {err_pipe.fd[0], POLLIN, 0}};
    int open_fds = 2;
    char buf[4096];
    while (open_fds > 0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            timed_out = true;
            break;
        }
        const int n = ::poll(fds, 2, static_cast<int>(std::min<long long>(left.count(), 1000)));
        if (n < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (int i = 0; i < 2; ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            const ssize_t got = ::read(fds[i].fd, buf, sizeof buf);
            if (got > 0) {
                (i == 0 ? out : err).append(buf, static_cast<std::size_t>(got));
            } else if (got == 0 || errno != EINTR) {
                fds[i].fd = -1;
                --open_fds;
            }
        }
    }

    if (timed_out) ::kill(pid, SIGKILL);
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!err.empty()) std::cerr << "[" << executable << "] " << err << std::flush;

    if (timed_out)
        throw BackendError("`" + executable + "` timed out after " +
                               std::to_string(timeout.count()) + " ms",
                           out);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw BackendError("`" + executable + "` failed with status " +
                               std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1),
                           out);
    return parse_backend_output(out, source, frame);
}

SubprocessDetector::SubprocessDetector(std::string executable, std::chrono::milliseconds timeout,
                                       std::string temp_dir)
    : executable_(std::move(executable)), timeout_(timeout), temp_dir_(std::move(temp_dir)) {
    if (temp_dir_.empty())
        temp_dir_ = (fs::temp_directory_path() / ("dronetile-" + std::to_string(::getpid()))).string();
    fs::create_directories(temp_dir_);
}

std::vector<Detection> SubprocessDetector::detect(const FrameContext& frame,
                                                  const Window& window) const {
    if (frame.pixels == nullptr || frame.pixels->empty())
        throw BackendError("subprocess backend needs frame pixels");
    static std::atomic<std::uint64_t> counter{0};
    const fs::path path = fs::path(temp_dir_) /
                          ("crop-" + std::to_string(counter.fetch_add(1)) + "-" +
                           to_string(window.source) + ".png");
    const cv::Mat crop = (*frame.pixels)(
        cv::Rect(window.origin_x, window.origin_y, window.width, window.height));
    if (!cv::imwrite(path.string(), crop))
        throw BackendError("cannot write crop `" + path.string() + "`");
    struct Remove {
        fs::path p;
        ~Remove() {
            std::error_code ec;
            fs::remove(p, ec);
        }
    } cleanup{path};
    return detect_via_subprocess(executable_, path.string(), window.source, frame.frame, timeout_);
}

// --- mock -------------------------------------------------------------------------------------

void MockDetectorConfig::validate() const {
    if (!(miss_prob >= 0.0 && miss_prob <= 1.0))
        throw std::invalid_argument("miss_prob must lie in [0,1]");
    if (!(fp_rate >= 0.0)) throw std::invalid_argument("fp_rate must be >= 0");
    if (!(jitter_px >= 0.0)) throw std::invalid_argument("jitter_px must be >= 0");
    if (!(score_range.min >= 0.0 && score_range.min <= score_range.max && score_range.max <= 1.0))
        throw std::invalid_argument("score_range must be an ordered sub-interval of [0,1]");
    if (!(fp_min_size > 0.0 && fp_min_size <= fp_max_size))
        throw std::invalid_argument("false-positive size range is invalid");
}

int window_index(const Source& source) noexcept {
    return source.kind == Source::Kind::tile ? 1 + source.tile : 0;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return hi > lo ? lo + (hi - lo) * u : lo;
}

std::uint64_t hash_string(const std::string& s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::int64_t frame, int window) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(frame));
    return splitmix64(h ^ static_cast<std::uint64_t>(window));
}

std::vector<Detection> mock_detect(std::span<const LabeledBox> truth, const Window& window,
                                   std::int64_t frame, const MockDetectorConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(derive_seed(cfg.rng_seed, frame, window_index(window.source)));
    const BoundingBox area = window.box();
    const double ww = window.width;
    const double wh = window.height;
    const double scale = cfg.resize_to > 0 ? cfg.resize_to / std::max(ww, wh) : 1.0;
    auto resolvable = [&](const BoundingBox& b) {
        return cfg.resize_to <= 0 || b.area() * scale * scale >= cfg.min_resized_area;
    };

    std::vector<Detection> out;
    for (const LabeledBox& t : truth) {
        if (intersection_area(t.box, area) <= 0) continue;
        const bool missed = uniform(rng, 0.0, 1.0) < cfg.miss_prob;
        const double j = cfg.jitter_px;
        const double dx1 = uniform(rng, -j, j), dy1 = uniform(rng, -j, j);
        const double dx2 = uniform(rng, -j, j), dy2 = uniform(rng, -j, j);
        const double score = uniform(rng, cfg.score_range.min, cfg.score_range.max);
        if (missed) continue;

        const double x1 = t.box.x1() + dx1, x2 = t.box.x2() + dx2;
        const double y1 = t.box.y1() + dy1, y2 = t.box.y2() + dy2;
        const BoundingBox jittered(std::min(x1, x2), std::min(y1, y2), std::max(x1, x2),
                                   std::max(y1, y2));
        const BoundingBox local =
            clip(jittered.translated(-window.origin_x, -window.origin_y), ww, wh);
        if (local.area() <= 0 || !resolvable(local)) continue;
        out.push_back({local, t.label, score, frame, window.source});
    }

    if (cfg.fp_rate > 0) {
        const int n = std::poisson_distribution<int>(cfg.fp_rate)(rng);
        for (int i = 0; i < n; ++i) {
            const double w = std::min(uniform(rng, cfg.fp_min_size, cfg.fp_max_size), ww);
            const double h = std::min(uniform(rng, cfg.fp_min_size, cfg.fp_max_size), wh);
            const double x = uniform(rng, 0.0, ww - w);
            const double y = uniform(rng, 0.0, wh - h);
            const double score = uniform(rng, cfg.score_range.min, cfg.score_range.max);
            const BoundingBox box(x, y, x + w, y + h);
            if (!resolvable(box)) continue;
            out.push_back({box, Label::drone, score, frame, window.source});
        }
    }
    return out;
}

MockDetector::MockDetector(Truth truth, MockDetectorConfig cfg)
    : truth_(std::move(truth)), cfg_(cfg) {
    cfg_.validate();
}

MockDetector::Truth MockDetector::truth_from(const std::map<std::string, GroundTruth>& gt) {
    Truth out;
    for (const auto& [video, g] : gt)
        for (const auto& [frame, boxes] : g.entries)
            for (const BoundingBox& b : boxes) out[video][frame].push_back({Label::drone, b});
    return out;
}

std::vector<Detection> MockDetector::detect(const FrameContext& frame, const Window& window) const {
    static const std::vector<LabeledBox> kNone;
    const std::vector<LabeledBox>* boxes = &kNone;
    if (auto v = truth_.find(frame.video); v != truth_.end())
        if (auto f = v->second.find(frame.frame); f != v->second.end()) boxes = &f->second;
    MockDetectorConfig cfg = cfg_;
    cfg.rng_seed = cfg_.rng_seed ^ hash_string(frame.video);
    return mock_detect(*boxes, window, frame.frame, cfg);
}

}  // namespace dronetile
