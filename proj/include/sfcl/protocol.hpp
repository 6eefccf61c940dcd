#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "sfcl/core.hpp"
#include "sfcl/loss.hpp"
#include "sfcl/nn.hpp"
#include "sfcl/wire.hpp"

// SplitFed-CL round orchestration. Clients and server exchange encoded
// messages over in-process channels; a round broadcasts the global models
// and schedule state, runs local training on every client, then aggregates
// parameters and logits by the reliability-weighted contribution ratios and
// updates the global threshold tau.

namespace sfcl::proto {

using real = double;  // shared by training, aggregation and the 1e-12 FedAvg check

enum class Mode { splitfed_cl, fedavg, no_correction, no_consistency };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct ProtoConfig {
    nn::NetConfig net;
    Mode mode = Mode::splitfed_cl;
    int local_epochs = 5;
    int batch_size = 4;
    double lr = 1e-4;
    double logit_lr = 1e-3;
    double tau0 = 10.0;
    double label_T = 0.9;        // confidence threshold for label correction
    double eta = 5e-4;           // l2 regularizer on the logits
    double teacher_ema_decay = 0.99;
    double loss_ema_decay = 0.9;
    int warmup_rounds = 20;
    double noise_std = 0.05;     // perturbation noise, fraction of value range
    double brightness = 0.1;     // perturbation brightness shift bound
    double logit_init = -10.0;
    std::uint64_t master_seed = 1;
};

// gamma warms up 1 -> 5 and lambda decays 3 -> 0 linearly over the first 50
// rounds, constant after.
std::pair<double, double> schedule_step(long round_index);

struct TrainSample {
    std::uint32_t id = 0;
    Tensor<real> x;  // (Cin, H, W)
    LabelMask y;
    bool corrupted = false;  // ground truth for evaluation only
};

struct ClientState {
    int id = 0;
    std::vector<TrainSample> data;
    nn::SplitParams<real> student;
    nn::SplitParams<real> teacher_local;
    double u_un = -10.0, u_cons = -10.0;
    LossScales scales;  // persists across rounds
};

struct ServerState {
    nn::SplitParams<real> teacher;
    nn::SplitParams<real> student_init;
    double tau = 10.0;
    double u_un = -10.0, u_cons = -10.0;
    long round = 0;
};

ServerState make_server(const ProtoConfig& cfg);

struct ClientSummary {
    int client_id = 0;
    long total_samples = 0;
    long d_re = 0;        // reliable count (strict, undecided excluded)
    long d_un = 0;        // unreliable count
    long undecided = 0;
    double mean_reliable_loss = 0.0;  // falls back to mu when d_re == 0
    double mu = 0.0, sigma = 0.0;     // stats of final-epoch per-sample losses
    double u_un = -10.0, u_cons = -10.0;
    long empty_batch_recoveries = 0;
    nn::SplitParams<real> params;

    double detected_noise_ratio() const {
        return total_samples ? static_cast<double>(d_un) / total_samples : 0.0;
    }
};

// Ordered, lossless, in-process byte channel.
class Channel {
  public:
    void send(wire::Bytes msg) { q_.push_back(std::move(msg)); }
    wire::Bytes recv() {
        if (q_.empty()) throw Error("channel: recv on empty channel");
        wire::Bytes m = std::move(q_.front());
        q_.pop_front();
        return m;
    }
    bool empty() const { return q_.empty(); }

  private:
    std::deque<wire::Bytes> q_;
};

struct Transport {
    std::vector<Channel> down;  // server -> client
    std::vector<Channel> up;    // client -> server
    explicit Transport(int n_clients) : down(n_clients), up(n_clients) {}
};

struct Broadcast {
    long round = 0;
    double tau = 0.0, gamma = 0.0, lambda = 0.0, s_t = 0.0;
    double u_un = 0.0, u_cons = 0.0;
    nn::SplitParams<real> teacher;
    nn::SplitParams<real> student_init;
};

wire::Bytes encode_broadcast(const Broadcast& b);
Broadcast decode_broadcast(const wire::Bytes& msg, const nn::NetConfig& net);
wire::Bytes encode_summary(const ClientSummary& s);
ClientSummary decode_summary(const wire::Bytes& msg, const nn::NetConfig& net);

// One client's local pass: local_epochs sweeps of split/correct/train with
// per-step EMA teacher updates. Mutates the client state and returns its
// summary.
ClientSummary local_train(ClientState& client, const Broadcast& b,
                          const ProtoConfig& cfg);

struct AggregateResult {
    nn::SplitParams<real> params;
    double u_un = 0.0, u_cons = 0.0;
    std::vector<double> r;  // contribution ratios, sum 1
    std::vector<double> q;  // performance ratios, sum 1
};

// r = (q .* d) / (q^T d) with d the normalized reliable counts and
// q = softmax(-gamma * L) over mean reliable losses. Falls back to sample
// count weights when no client reports a reliable sample, or when
// sample_count_weights is set (FedAvg mode).
AggregateResult aggregate(const std::vector<ClientSummary>& summaries, double gamma,
                          bool sample_count_weights);

// tau = sum_i q_i * (mu_i + lambda * sigma_i).
double update_tau(const std::vector<ClientSummary>& summaries,
                  const std::vector<double>& q, double lambda);

struct ClientRoundStats {
    int client_id = 0;
    long total = 0;
    long d_re = 0, d_un = 0, undecided = 0;
    double r = 0.0, q = 0.0;
    double mu = 0.0, sigma = 0.0, mean_reliable_loss = 0.0;
    double detected_noise_ratio = 0.0;
    double u_un = 0.0, u_cons = 0.0;
    long empty_batch_recoveries = 0;
};

struct RoundReport {
    long round = 0;
    double tau = 0.0;       // threshold in force during this round
    double tau_next = 0.0;  // threshold computed for the next round
    double gamma = 0.0, lambda = 0.0, s_t = 0.0;
    double u_un = 0.0, u_cons = 0.0;  // merged global logits
    std::vector<ClientRoundStats> clients;
    bool has_test = false;
    double test_acc = 0.0, test_dice_loss = 0.0, test_miou = 0.0;
};

// Full round: broadcast, local training on every client, aggregation,
// threshold update. Clients run sequentially; the heavy inner loops are
// OpenMP-parallel. Throws WireError if a transport message fails to decode.
RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      Transport& transport, const ProtoConfig& cfg);

}  // namespace sfcl::proto
