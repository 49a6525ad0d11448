#include "affect/pipeline.hpp"

#include "affect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace affect {

const char* to_string(ComponentKind k) noexcept
{
    switch (k) {
    case ComponentKind::input: return "input";
    case ComponentKind::processing: return "processing";
    case ComponentKind::output: return "output";
    }
    return "?";
}

void validate(const ComponentDescriptor& d)
{
    if (d.name.empty())
        throw InvalidArgument("component name is empty");
    if (!std::isfinite(d.rate_hz) || d.rate_hz <= 0.0)
        throw InvalidArgument("component '" + d.name + "': rate_hz must be > 0");
    switch (d.kind) {
    case ComponentKind::input:
        if (!d.inputs.empty() || d.outputs.empty())
            throw InvalidArgument("input component '" + d.name +
                                  "' must read no queue and write at least one");
        break;
    case ComponentKind::processing:
        if (d.inputs.empty() || d.outputs.empty())
            throw InvalidArgument("processing component '" + d.name +
                                  "' must read and write at least one queue each");
        break;
    case ComponentKind::output:
        if (d.inputs.empty() || !d.outputs.empty())
            throw InvalidArgument("output component '" + d.name +
                                  "' must read at least one queue and write none");
        break;
    }
}

// --- ComponentContext -------------------------------------------------------

Timestamp ComponentContext::now() const
{
    return runtime_->now();
}

const std::string& ComponentContext::name() const noexcept
{
    return runtime_->slots_[index_]->descriptor.name;
}

void ComponentContext::push(const std::string& topic, Payload payload)
{
    push(topic, std::move(payload), runtime_->now());
}

void ComponentContext::push(const std::string& topic, Payload payload, Timestamp at)
{
    auto& slot = *runtime_->slots_[index_];
    const auto& outs = slot.descriptor.outputs;
    if (std::find(outs.begin(), outs.end(), topic) == outs.end())
        throw InvalidArgument("component '" + slot.descriptor.name + "' does not write '" + topic + "'");
    runtime_->push(topic, QueueMessage{topic, at, slot.descriptor.name, std::move(payload)});
    slot.emitted.fetch_add(1);
    slot.last_emit.store(at);
}

std::optional<QueueMessage> ComponentContext::pop(const std::string& topic)
{
    const auto& slot = *runtime_->slots_[index_];
    const auto& ins = slot.descriptor.inputs;
    if (std::find(ins.begin(), ins.end(), topic) == ins.end())
        throw InvalidArgument("component '" + slot.descriptor.name + "' does not read '" + topic + "'");
    return runtime_->pop(topic);
}

// --- Runtime ----------------------------------------------------------------

Runtime::Runtime(RuntimeOptions options, std::shared_ptr<const SessionClock> clock)
    : options_(options), clock_(clock ? std::move(clock) : std::make_shared<const SessionClock>())
{
}

Runtime::~Runtime()
{
    if (running_)
        stop();
}

void Runtime::create_topic(const std::string& topic, std::optional<std::size_t> capacity)
{
    std::lock_guard lock(topics_mutex_);
    if (topics_.count(topic))
        return;
    topics_.emplace(topic, std::make_unique<BoundedQueue<QueueMessage>>(
                               capacity.value_or(options_.queue_capacity)));
}

bool Runtime::has_topic(const std::string& topic) const
{
    std::lock_guard lock(topics_mutex_);
    return topics_.count(topic) > 0;
}

BoundedQueue<QueueMessage>& Runtime::queue(const std::string& topic)
{
    std::lock_guard lock(topics_mutex_);
    auto it = topics_.find(topic);
    if (it == topics_.end())
        throw InvalidArgument("unknown topic '" + topic + "'");
    return *it->second;
}

ComponentHandle Runtime::register_component(ComponentDescriptor d, std::unique_ptr<Component> component)
{
    if (running_)
        throw InvalidArgument("cannot register components while running");
    validate(d);
    if (!component)
        throw InvalidArgument("component '" + d.name + "' has no implementation");
    if (has_component(d.name))
        throw InvalidArgument("duplicate component name '" + d.name + "'");
    for (const auto& t : d.inputs)
        create_topic(t);
    for (const auto& t : d.outputs)
        create_topic(t);

    auto slot = std::make_unique<Slot>();
    slot->enabled = d.enabled;
    slot->descriptor = std::move(d);
    slot->component = std::move(component);
    slots_.push_back(std::move(slot));
    return ComponentHandle{slots_.size() - 1, slots_.back()->descriptor.name};
}

bool Runtime::has_component(const std::string& name) const
{
    return std::any_of(slots_.begin(), slots_.end(),
                       [&](const auto& s) { return s->descriptor.name == name; });
}

void Runtime::push(const std::string& topic, QueueMessage msg)
{
    auto& q = queue(topic);
    msg.topic = topic;
    q.push(std::move(msg));
}

std::optional<QueueMessage> Runtime::pop(const std::string& topic)
{
    return queue(topic).pop();
}

bool Runtime::should_exit(const Slot& slot) const
{
    if (all_stopping_)
        return true;
    return inputs_stopping_ && slot.descriptor.kind == ComponentKind::input;
}

void Runtime::wake_all()
{
    std::lock_guard lock(wake_mutex_);
    wake_.notify_all();
}

void Runtime::run_component(std::size_t index)
{
    auto& slot = *slots_[index];
    ComponentContext ctx(*this, index);
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / slot.descriptor.rate_hz));
    auto deadline = std::chrono::steady_clock::now();

    while (!should_exit(slot)) {
        {
            std::lock_guard step_lock(slot.step_mutex);
            if (slot.enabled && !should_exit(slot)) {
                try {
                    slot.component->step(ctx);
                } catch (const std::exception& ex) {
                    slot.step_errors.fetch_add(1);
                    std::cerr << "component '" << slot.descriptor.name << "': " << ex.what() << '\n';
                }
                slot.steps.fetch_add(1);
            }
        }
        deadline += period;
        const auto now = std::chrono::steady_clock::now();
        if (deadline < now) {
            const auto behind = (now - deadline) / period + 1;
            slot.skipped.fetch_add(static_cast<std::uint64_t>(behind));
            deadline += behind * period;
        }
        std::unique_lock lock(wake_mutex_);
        wake_.wait_until(lock, deadline, [&] { return should_exit(slot); });
    }
}

void Runtime::start()
{
    if (running_)
        throw InvalidArgument("runtime already running");
    if (slots_.empty())
        throw InvalidArgument("no components registered");
    inputs_stopping_ = false;
    all_stopping_ = false;
    running_ = true;
    for (std::size_t i = 0; i < slots_.size(); ++i)
        slots_[i]->thread = std::thread([this, i] { run_component(i); });
}

StopReport Runtime::stop()
{
    StopReport report;
    if (!running_)
        return report;

    // sources first, then let the rest of the graph drain
    inputs_stopping_ = true;
    wake_all();
    for (auto& s : slots_)
        if (s->descriptor.kind == ComponentKind::input && s->thread.joinable())
            s->thread.join();

    const auto grace_end = std::chrono::steady_clock::now() + options_.stop_grace;
    auto queues_empty = [this] {
        std::lock_guard lock(topics_mutex_);
        return std::all_of(topics_.begin(), topics_.end(),
                           [](const auto& kv) { return kv.second->size() == 0; });
    };
    auto anyone_drains = [this] {
        return std::any_of(slots_.begin(), slots_.end(), [](const auto& s) {
            return s->descriptor.kind != ComponentKind::input && s->enabled;
        });
    };
    while (anyone_drains() && !queues_empty() && std::chrono::steady_clock::now() < grace_end)
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    report.drained = queues_empty();

    all_stopping_ = true;
    wake_all();
    for (auto& s : slots_)
        if (s->thread.joinable())
            s->thread.join();

    for (std::size_t i = 0; i < slots_.size(); ++i) {
        ComponentContext ctx(*this, i);
        try {
            slots_[i]->component->on_stop(ctx);
        } catch (const std::exception& ex) {
            std::cerr << "component '" << slots_[i]->descriptor.name << "' on_stop: " << ex.what() << '\n';
        }
    }
    running_ = false;
    report.topics = topics();
    return report;
}

void Runtime::set_enabled(const std::string& name, bool enabled)
{
    for (auto& s : slots_) {
        if (s->descriptor.name == name) {
            std::lock_guard step_lock(s->step_mutex);
            s->enabled = enabled;
            return;
        }
    }
    throw InvalidArgument("unknown component '" + name + "'");
}

std::vector<ComponentStatus> Runtime::components() const
{
    std::vector<ComponentStatus> out;
    for (const auto& s : slots_) {
        ComponentStatus st;
        st.name = s->descriptor.name;
        st.kind = s->descriptor.kind;
        st.rate_hz = s->descriptor.rate_hz;
        st.enabled = s->enabled;
        st.steps = s->steps;
        st.skipped_deadlines = s->skipped;
        st.emitted = s->emitted;
        st.step_errors = s->step_errors;
        const double w = s->last_emit;
        if (w >= 0.0)
            st.last_emit = w;
        out.push_back(std::move(st));
    }
    return out;
}

std::vector<TopicStatus> Runtime::topics() const
{
    std::lock_guard lock(topics_mutex_);
    std::vector<TopicStatus> out;
    for (const auto& [name, q] : topics_)
        out.push_back(TopicStatus{name, q->size(), q->capacity(), q->pushed(), q->dropped()});
    return out;
}

// --- activity ---------------------------------------------------------------

double ActivityState::effective(Timestamp now) const noexcept
{
    if (now - updated_at > stale_after)
        return 0.0;
    return score;
}

void ActivityRegistry::configure(const std::string& modality, double threshold, double stale_after)
{
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw InvalidArgument("activity threshold outside [0, 1]");
    if (!(stale_after > 0.0) || !std::isfinite(stale_after))
        throw InvalidArgument("stale_after must be > 0");
    std::unique_lock lock(mutex_);
    auto& s = states_[modality];
    if (s.modality.empty()) {
        s.modality = modality;
        // never reported: stale from the start
        s.updated_at = -std::numeric_limits<double>::infinity();
    }
    s.threshold = threshold;
    s.stale_after = stale_after;
}

ActivityState ActivityRegistry::set_activity(const std::string& modality, double score, Timestamp now)
{
    if (!(score >= 0.0 && score <= 1.0))
        throw InvalidArgument("activity score outside [0, 1]");
    std::unique_lock lock(mutex_);
    auto& s = states_[modality];
    s.modality = modality;
    s.score = score;
    s.updated_at = now;
    return s;
}

ActivityState ActivityRegistry::get(const std::string& modality) const
{
    std::shared_lock lock(mutex_);
    if (auto it = states_.find(modality); it != states_.end())
        return it->second;
    ActivityState s;
    s.modality = modality;
    s.updated_at = -std::numeric_limits<double>::infinity();
    return s;
}

std::vector<ActivityState> ActivityRegistry::all() const
{
    std::shared_lock lock(mutex_);
    std::vector<ActivityState> out;
    for (const auto& [_, s] : states_)
        out.push_back(s);
    return out;
}

std::optional<AffectEvent> gate_event(const AffectEvent& e, const ActivityState& a, Timestamp now,
                                      bool enabled)
{
    if (e.modality != a.modality)
        throw InvalidArgument("gating '" + e.modality + "' event with '" + a.modality + "' activity");
    if (!enabled)
        return std::nullopt;
    const double score = a.effective(now);
    if (score < a.threshold)
        return std::nullopt;
    AffectEvent out = e;
    out.weight = e.weight * score;
    return out;
}

} // namespace affect
