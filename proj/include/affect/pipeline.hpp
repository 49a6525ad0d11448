#pragma once

#include "affect/fusion.hpp"
#include "affect/signals.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace affect {

// Monotonic seconds since construction.
class SessionClock {
public:
    SessionClock() : origin_(std::chrono::steady_clock::now()) {}

    Timestamp now() const noexcept
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
    }
    std::chrono::steady_clock::time_point origin() const noexcept { return origin_; }

private:
    std::chrono::steady_clock::time_point origin_;
};

using Payload = std::variant<RawSamples, LandmarkFrame, AffectEvent, ActivityUpdate, FusionResult>;

struct QueueMessage {
    std::string topic;
    Timestamp at = 0.0;
    std::string producer;
    Payload payload;
};

inline constexpr std::size_t default_queue_capacity = 256;

// Multi-producer/multi-consumer FIFO with a fixed capacity. A push into a full
// queue drops the oldest element and bumps the drop counter.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity = default_queue_capacity) : capacity_(capacity)
    {
        if (capacity_ == 0)
            capacity_ = 1;
    }

    // Returns true when an older element had to be dropped.
    bool push(T value)
    {
        std::lock_guard lock(mutex_);
        bool dropped = false;
        if (items_.size() >= capacity_) {
            items_.pop_front();
            ++dropped_;
            dropped = true;
        }
        items_.push_back(std::move(value));
        ++pushed_;
        return dropped;
    }

    std::optional<T> pop()
    {
        std::lock_guard lock(mutex_);
        if (items_.empty())
            return std::nullopt;
        T v = std::move(items_.front());
        items_.pop_front();
        return v;
    }

    std::size_t size() const
    {
        std::lock_guard lock(mutex_);
        return items_.size();
    }
    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t dropped() const
    {
        std::lock_guard lock(mutex_);
        return dropped_;
    }
    std::uint64_t pushed() const
    {
        std::lock_guard lock(mutex_);
        return pushed_;
    }

private:
    mutable std::mutex mutex_;
    std::deque<T> items_;
    std::size_t capacity_;
    std::uint64_t dropped_ = 0;
    std::uint64_t pushed_ = 0;
};

enum class ComponentKind { input, processing, output };

const char* to_string(ComponentKind k) noexcept;

struct ComponentDescriptor {
    std::string name;
    ComponentKind kind = ComponentKind::processing;
    double rate_hz = 10.0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    bool enabled = true;
};

// Throws InvalidArgument when the descriptor breaks the input/processing/output
// topic arity rules or has a non-positive rate.
void validate(const ComponentDescriptor& d);

class Runtime;

// Handed to Component::step(); restricts queue access to the declared topics.
class ComponentContext {
public:
    Timestamp now() const;
    void push(const std::string& topic, Payload payload);
    void push(const std::string& topic, Payload payload, Timestamp at);
    std::optional<QueueMessage> pop(const std::string& topic);
    const std::string& name() const noexcept;

private:
    friend class Runtime;
    ComponentContext(Runtime& rt, std::size_t index) : runtime_(&rt), index_(index) {}
    Runtime* runtime_;
    std::size_t index_;
};

class Component {
public:
    virtual ~Component() = default;
    virtual void step(ComponentContext& ctx) = 0;
    // Runs once on the runtime's stopping thread after all steps are done.
    virtual void on_stop(ComponentContext&) {}
};

// Adapts a callable into a Component.
class FunctionComponent : public Component {
public:
    explicit FunctionComponent(std::function<void(ComponentContext&)> fn) : fn_(std::move(fn)) {}
    void step(ComponentContext& ctx) override { fn_(ctx); }

private:
    std::function<void(ComponentContext&)> fn_;
};

struct ComponentHandle {
    std::size_t index = 0;
    std::string name;
};

struct ComponentStatus {
    std::string name;
    ComponentKind kind = ComponentKind::processing;
    double rate_hz = 0.0;
    bool enabled = true;
    std::uint64_t steps = 0;
    std::uint64_t skipped_deadlines = 0;
    std::uint64_t emitted = 0;
    std::optional<Timestamp> last_emit; // watermark of the latest push
    std::uint64_t step_errors = 0;
};

struct TopicStatus {
    std::string name;
    std::size_t size = 0;
    std::size_t capacity = 0;
    std::uint64_t pushed = 0;
    std::uint64_t dropped = 0;
};

struct StopReport {
    std::vector<TopicStatus> topics;
    bool drained = true; // all queues were empty before the grace period ran out
};

struct RuntimeOptions {
    std::size_t queue_capacity = default_queue_capacity;
    std::chrono::milliseconds stop_grace{2000};
};

// Multi-rate component scheduler: every enabled component runs on its own
// thread at its declared rate. Missed deadlines are skipped, not replayed.
class Runtime {
public:
    explicit Runtime(RuntimeOptions options = {}, std::shared_ptr<const SessionClock> clock = nullptr);
    ~Runtime();
    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    // Pre-creates a topic with a specific capacity. Existing topics are kept.
    void create_topic(const std::string& topic, std::optional<std::size_t> capacity = std::nullopt);
    bool has_topic(const std::string& topic) const;

    // Throws InvalidArgument on duplicate names, arity violations or when the
    // runtime is already running.
    ComponentHandle register_component(ComponentDescriptor d, std::unique_ptr<Component> component);

    void push(const std::string& topic, QueueMessage msg);
    std::optional<QueueMessage> pop(const std::string& topic);

    void start();
    StopReport stop();
    bool running() const noexcept { return running_.load(); }

    // Takes effect before this returns: a disabled component runs no further step.
    void set_enabled(const std::string& name, bool enabled);
    bool has_component(const std::string& name) const;

    std::vector<ComponentStatus> components() const;
    std::vector<TopicStatus> topics() const;
    Timestamp now() const { return clock_->now(); }
    const SessionClock& clock() const noexcept { return *clock_; }

private:
    friend class ComponentContext;

    struct Slot {
        ComponentDescriptor descriptor;
        std::unique_ptr<Component> component;
        std::mutex step_mutex;
        std::atomic<bool> enabled{true};
        std::atomic<std::uint64_t> steps{0};
        std::atomic<std::uint64_t> skipped{0};
        std::atomic<std::uint64_t> emitted{0};
        std::atomic<std::uint64_t> step_errors{0};
        std::atomic<double> last_emit{-1.0};
        std::thread thread;
    };

    BoundedQueue<QueueMessage>& queue(const std::string& topic);
    void run_component(std::size_t index);
    bool should_exit(const Slot& slot) const;
    void wake_all();

    RuntimeOptions options_;
    std::shared_ptr<const SessionClock> clock_;

    mutable std::mutex topics_mutex_;
    std::map<std::string, std::unique_ptr<BoundedQueue<QueueMessage>>> topics_;

    std::vector<std::unique_ptr<Slot>> slots_;
    std::atomic<bool> running_{false};
    std::atomic<bool> inputs_stopping_{false};
    std::atomic<bool> all_stopping_{false};
    std::mutex wake_mutex_;
    std::condition_variable wake_;
};

inline constexpr double default_activity_threshold = 0.3;
inline constexpr double default_stale_after = 1.0;

struct ActivityState {
    std::string modality;
    double score = 0.0;
    double threshold = default_activity_threshold;
    Timestamp updated_at = 0.0;
    double stale_after = default_stale_after;

    // Score 0 once the report is older than stale_after.
    double effective(Timestamp now) const noexcept;
};

// Per-modality activity scores. Concurrent readers, serialized writers.
class ActivityRegistry {
public:
    // Sets threshold/staleness for a modality without touching its score.
    void configure(const std::string& modality, double threshold, double stale_after);

    // Throws InvalidArgument for a score outside [0, 1].
    ActivityState set_activity(const std::string& modality, double score, Timestamp now);

    // A modality that never reported yields a state with score 0.
    ActivityState get(const std::string& modality) const;
    std::vector<ActivityState> all() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, ActivityState> states_;
};

// Scales an event's weight by the modality's activity score, or drops it when
// the score is under threshold or the modality is disabled. Throws
// InvalidArgument when the modalities differ.
std::optional<AffectEvent> gate_event(const AffectEvent& e, const ActivityState& a, Timestamp now,
                                      bool enabled = true);

} // namespace affect
