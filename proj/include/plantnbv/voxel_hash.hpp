#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

namespace plantnbv {

// Packed voxel key: 21 bits per signed axis index.
constexpr std::int32_t kVoxelKeyOffset = 1 << 20;

inline std::uint64_t pack_voxel_key(std::int32_t i, std::int32_t j, std::int32_t k) {
    const std::uint64_t a = static_cast<std::uint32_t>(i + kVoxelKeyOffset);
    const std::uint64_t b = static_cast<std::uint32_t>(j + kVoxelKeyOffset);
    const std::uint64_t c = static_cast<std::uint32_t>(k + kVoxelKeyOffset);
    return (a << 42) | (b << 21) | c;
}

inline void unpack_voxel_key(std::uint64_t key, std::int32_t& i, std::int32_t& j,
                             std::int32_t& k) {
    i = static_cast<std::int32_t>((key >> 42) & 0x1fffff) - kVoxelKeyOffset;
    j = static_cast<std::int32_t>((key >> 21) & 0x1fffff) - kVoxelKeyOffset;
    k = static_cast<std::int32_t>(key & 0x1fffff) - kVoxelKeyOffset;
}

inline std::uint64_t mix_voxel_key(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Open-addressing hash map from voxel key to log-odds. unordered_map is too
// slow for the tens of millions of upserts a single cloud insertion performs.
class VoxelTable {
   public:
    explicit VoxelTable(std::size_t initial_capacity = 1 << 16) { rehash(initial_capacity); }

    std::size_t size() const { return size_; }

    double* find(std::uint64_t key) {
        std::size_t idx = slot(key);
        while (true) {
            if (!used_[idx]) return nullptr;
            if (keys_[idx] == key) return &values_[idx];
            idx = (idx + 1) & mask_;
        }
    }
    const double* find(std::uint64_t key) const {
        return const_cast<VoxelTable*>(this)->find(key);
    }

    // Returns the slot value, inserting `init` if the key is new.
    double& get_or_insert(std::uint64_t key, double init) {
        if ((size_ + 1) * 10 >= capacity_ * 7) rehash(capacity_ * 2);
        std::size_t idx = slot(key);
        while (used_[idx]) {
            if (keys_[idx] == key) return values_[idx];
            idx = (idx + 1) & mask_;
        }
        used_[idx] = 1;
        keys_[idx] = key;
        values_[idx] = init;
        ++size_;
        return values_[idx];
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t idx = 0; idx < capacity_; ++idx) {
            if (used_[idx]) fn(keys_[idx], values_[idx]);
        }
    }

    void clear() {
        std::memset(used_.data(), 0, used_.size());
        size_ = 0;
    }

   private:
    std::size_t slot(std::uint64_t key) const { return mix_voxel_key(key) & mask_; }

    void rehash(std::size_t new_capacity) {
        std::vector<std::uint64_t> old_keys = std::move(keys_);
        std::vector<double> old_values = std::move(values_);
        std::vector<std::uint8_t> old_used = std::move(used_);
        capacity_ = 1;
        while (capacity_ < new_capacity) capacity_ <<= 1;
        mask_ = capacity_ - 1;
        keys_.assign(capacity_, 0);
        values_.assign(capacity_, 0.0);
        used_.assign(capacity_, 0);
        size_ = 0;
        for (std::size_t idx = 0; idx < old_used.size(); ++idx) {
            if (old_used[idx]) get_or_insert(old_keys[idx], old_values[idx]);
        }
    }

    std::vector<std::uint64_t> keys_;
    std::vector<double> values_;
    std::vector<std::uint8_t> used_;
    std::size_t capacity_ = 0;
    std::size_t mask_ = 0;
    std::size_t size_ = 0;
};

// Open-addressing set of voxel keys with O(1) clear via epoch stamping.
// Reused across insertions to avoid reallocating multi-megabyte tables.
class VoxelKeySet {
   public:
    explicit VoxelKeySet(std::size_t initial_capacity = 1 << 16) { rehash(initial_capacity); }

    std::size_t size() const { return size_; }

    // Returns true if the key was newly inserted.
    bool insert(std::uint64_t key) {
        if ((size_ + 1) * 10 >= capacity_ * 7) rehash(capacity_ * 2);
        std::size_t idx = slot(key);
        while (stamp_[idx] == epoch_) {
            if (keys_[idx] == key) return false;
            idx = (idx + 1) & mask_;
        }
        stamp_[idx] = epoch_;
        keys_[idx] = key;
        ++size_;
        return true;
    }

    bool contains(std::uint64_t key) const {
        std::size_t idx = slot(key);
        while (stamp_[idx] == epoch_) {
            if (keys_[idx] == key) return true;
            idx = (idx + 1) & mask_;
        }
        return false;
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t idx = 0; idx < capacity_; ++idx) {
            if (stamp_[idx] == epoch_) fn(keys_[idx]);
        }
    }

    void clear() {
        ++epoch_;
        size_ = 0;
        if (epoch_ == 0) {  // wrapped: stamps are stale, reset storage
            std::fill(stamp_.begin(), stamp_.end(), std::uint32_t{0});
            epoch_ = 1;
        }
    }

   private:
    std::size_t slot(std::uint64_t key) const { return mix_voxel_key(key) & mask_; }

    void rehash(std::size_t new_capacity) {
        std::vector<std::uint64_t> old_keys = std::move(keys_);
        std::vector<std::uint32_t> old_stamp = std::move(stamp_);
        const std::uint32_t old_epoch = epoch_;
        capacity_ = 1;
        while (capacity_ < new_capacity) capacity_ <<= 1;
        mask_ = capacity_ - 1;
        keys_.assign(capacity_, 0);
        stamp_.assign(capacity_, 0);
        epoch_ = 1;
        size_ = 0;
        for (std::size_t idx = 0; idx < old_stamp.size(); ++idx) {
            if (old_stamp[idx] == old_epoch) insert(old_keys[idx]);
        }
    }

    std::vector<std::uint64_t> keys_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 1;
    std::size_t capacity_ = 0;
    std::size_t mask_ = 0;
    std::size_t size_ = 0;
};

// Visit set with one cached flag byte per key: the frustum tracer stores the
// per-voxel termination decision on first visit so repeat visits never touch
// the (much larger) occupancy table.
class VoxelVisitSet {
   public:
    explicit VoxelVisitSet(std::size_t initial_capacity = 1 << 16) {
        rehash(initial_capacity);
    }

    std::size_t size() const { return size_; }

    // Returns (newly inserted, slot index).
    std::pair<bool, std::size_t> acquire(std::uint64_t key) {
        if ((size_ + 1) * 10 >= capacity_ * 7) rehash(capacity_ * 2);
        std::size_t idx = slot(key);
        while (stamp_[idx] == epoch_) {
            if (keys_[idx] == key) return {false, idx};
            idx = (idx + 1) & mask_;
        }
        stamp_[idx] = epoch_;
        keys_[idx] = key;
        flags_[idx] = 0;
        ++size_;
        return {true, idx};
    }

    std::uint8_t flag(std::size_t idx) const { return flags_[idx]; }
    void set_flag(std::size_t idx, std::uint8_t value) { flags_[idx] = value; }

    void clear() {
        ++epoch_;
        size_ = 0;
        if (epoch_ == 0) {
            std::fill(stamp_.begin(), stamp_.end(), std::uint32_t{0});
            epoch_ = 1;
        }
    }

   private:
    std::size_t slot(std::uint64_t key) const { return mix_voxel_key(key) & mask_; }

    void rehash(std::size_t new_capacity) {
        std::vector<std::uint64_t> old_keys = std::move(keys_);
        std::vector<std::uint32_t> old_stamp = std::move(stamp_);
        std::vector<std::uint8_t> old_flags = std::move(flags_);
        const std::uint32_t old_epoch = epoch_;
        capacity_ = 1;
        while (capacity_ < new_capacity) capacity_ <<= 1;
        mask_ = capacity_ - 1;
        keys_.assign(capacity_, 0);
        stamp_.assign(capacity_, 0);
        flags_.assign(capacity_, 0);
        epoch_ = 1;
        size_ = 0;
        for (std::size_t idx = 0; idx < old_stamp.size(); ++idx) {
            if (old_stamp[idx] == old_epoch) {
                const auto [fresh, new_idx] = acquire(old_keys[idx]);
                if (fresh) flags_[new_idx] = old_flags[idx];
            }
        }
    }

    std::vector<std::uint64_t> keys_;
    std::vector<std::uint32_t> stamp_;
    std::vector<std::uint8_t> flags_;
    std::uint32_t epoch_ = 1;
    std::size_t capacity_ = 0;
    std::size_t mask_ = 0;
    std::size_t size_ = 0;
};

}  // namespace plantnbv
