#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "rrnn/error.hpp"
#include "rrnn/protocols.hpp"

namespace rrnn {

namespace {

Vector gaussian(std::size_t n, double sigma, std::mt19937_64& rng) {
    Vector v(n);
    if (sigma == 0.0) {
        return v;
    }
    std::normal_distribution<double> dist(0.0, sigma);
    for (double& x : v) {
        x = dist(rng);
    }
    return v;
}

// Random orthonormal basis (rows) by Gram-Schmidt on a Gaussian matrix.
Matrix random_orthonormal(std::size_t n, std::mt19937_64& rng) {
    Matrix q(n, n);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (;;) {
            Vector row(n);
            for (double& x : row) {
                x = dist(rng);
            }
            for (std::size_t k = 0; k < i; ++k) {
                double proj = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    proj += row[j] * q(k, j);
                }
                for (std::size_t j = 0; j < n; ++j) {
                    row[j] -= proj * q(k, j);
                }
            }
            const double norm = std::sqrt(dot(row, row));
            if (norm > 1e-6) {
                for (std::size_t j = 0; j < n; ++j) {
                    q(i, j) = row[j] / norm;
                }
                break;
            }
        }
    }
    return q;
}

// A view-dependent linear map shared by every subject: rotations by
// view·rate_j in the coordinate planes of a random basis.
class ViewMap {
public:
    ViewMap(std::size_t dim, double rotation, std::mt19937_64& rng)
        : basis_(random_orthonormal(dim, rng)), rates_(dim / 2) {
        std::uniform_real_distribution<double> rate(0.5, 1.5);
        for (double& r : rates_) {
            r = rotation * rate(rng);
        }
    }

    Vector apply(const Vector& z, double view) const {
        // Coordinates in the rotated basis, rotate plane by plane, map back.
        Vector c = matvec(basis_, z);
        for (std::size_t k = 0; k < rates_.size(); ++k) {
            const double angle = view * rates_[k];
            const double cs = std::cos(angle);
            const double sn = std::sin(angle);
            const double a = c[2 * k];
            const double b = c[2 * k + 1];
            c[2 * k] = cs * a - sn * b;
            c[2 * k + 1] = sn * a + cs * b;
        }
        return matvec_transposed(basis_, c);
    }

private:
    Matrix basis_;
    std::vector<double> rates_;
};

Vector unit_direction(std::size_t n, std::mt19937_64& rng) {
    Vector v = gaussian(n, 1.0, rng);
    const double norm = std::sqrt(dot(v, v));
    for (double& x : v) {
        x /= norm;
    }
    return v;
}

std::string subject_name(std::size_t s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%03zu", s);
    return buf;
}

}  // namespace

PoseDataset synth_pose_dataset(const PoseSynthConfig& cfg) {
    if (cfg.subjects < 4) {
        throw Error(ErrorCode::invalid_argument, "synth pose: need at least 4 subjects");
    }
    if (cfg.dim < 4) {
        throw Error(ErrorCode::invalid_argument, "synth pose: need dimension at least 4");
    }
    if (!(cfg.noise_sigma >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "synth pose: noise sigma must be >= 0");
    }
    if (cfg.sessions == 0) {
        throw Error(ErrorCode::invalid_argument, "synth pose: need at least 1 session");
    }

    std::mt19937_64 rng(cfg.seed);
    const ViewMap view(cfg.dim, cfg.pose_rotation, rng);
    const Vector shift = unit_direction(cfg.dim, rng);

    std::vector<Vector> identities;
    identities.reserve(cfg.subjects);
    for (std::size_t s = 0; s < cfg.subjects; ++s) {
        identities.push_back(gaussian(cfg.dim, 1.0, rng));
    }

    std::vector<SubjectPoseSet> sets;
    for (std::size_t s = 0; s < cfg.subjects; ++s) {
        for (std::size_t e = 0; e < cfg.sessions; ++e) {
            SubjectPoseSet set;
            set.subject_id = subject_name(s);
            set.set_id = set.subject_id + "_e" + std::to_string(e);
            for (std::size_t pose = 0; pose < PoseGrid::kCount; ++pose) {
                const double step = static_cast<double>(pose) - PoseGrid::kFrontal;
                Vector x = view.apply(identities[s], step);
                axpy(step * cfg.pose_shift, shift, x);
                axpy(1.0, gaussian(cfg.dim, cfg.noise_sigma, rng), x);
                set.features.emplace(pose, std::move(x));
            }
            sets.push_back(std::move(set));
        }
    }
    return split_pose_subjects(std::move(sets));
}

std::vector<VideoTrack> synth_video_dataset(const VideoSynthConfig& cfg) {
    if (cfg.subjects < 2) {
        throw Error(ErrorCode::invalid_argument, "synth video: need at least 2 subjects");
    }
    if (cfg.dim < 4) {
        throw Error(ErrorCode::invalid_argument, "synth video: need dimension at least 4");
    }
    if (cfg.tracks_per_subject == 0 || cfg.frames == 0) {
        throw Error(ErrorCode::invalid_argument,
                    "synth video: need at least one track per subject and one frame per track");
    }
    if (!(cfg.noise_sigma >= 0.0) || !(cfg.walk_step >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "synth video: noise and walk step must be >= 0");
    }

    constexpr double kViewLimit = 1.5;
    std::mt19937_64 rng(cfg.seed);
    const ViewMap view(cfg.dim, cfg.view_rotation, rng);
    const Vector shift = unit_direction(cfg.dim, rng);

    std::vector<Vector> identities;
    identities.reserve(cfg.subjects);
    for (std::size_t s = 0; s < cfg.subjects; ++s) {
        identities.push_back(gaussian(cfg.dim, 1.0, rng));
    }

    std::uniform_real_distribution<double> start(-1.0, 1.0);
    std::normal_distribution<double> walk(0.0, 1.0);
    std::vector<VideoTrack> tracks;
    tracks.reserve(cfg.subjects * cfg.tracks_per_subject);
    for (std::size_t s = 0; s < cfg.subjects; ++s) {
        for (std::size_t k = 0; k < cfg.tracks_per_subject; ++k) {
            VideoTrack track;
            track.subject_id = subject_name(s);
            track.track_id = track.subject_id + "_v" + std::to_string(k);
            double angle = start(rng);
            for (std::size_t t = 0; t < cfg.frames; ++t) {
                if (t > 0 && cfg.walk_step > 0.0) {
                    angle = std::clamp(angle + cfg.walk_step * walk(rng), -kViewLimit, kViewLimit);
                }
                Vector x = view.apply(identities[s], angle);
                axpy(angle, shift, x);
                axpy(1.0, gaussian(cfg.dim, cfg.noise_sigma, rng), x);
                track.frames.push_back(std::move(x));
            }
            tracks.push_back(std::move(track));
        }
    }
    return tracks;
}

}  // namespace rrnn
