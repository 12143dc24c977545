#include "isrm/geometry.hpp"

#include <algorithm>
#include <set>

#include "isrm/errors.hpp"

namespace isrm {

double Box::volume() const {
    if (sides.empty()) return 0.0;
    double v = 1.0;
    for (const auto& s : sides) v *= std::max(0.0, s.length());
    return v;
}

bool Box::contains(const Point& s) const {
    if (s.size() != dim()) return false;
    for (int i = 0; i < dim(); ++i)
        if (s[i] < sides[i].lo || s[i] > sides[i].hi) return false;
    return true;
}

bool Box::contains_box(const Box& other, double slack) const {
    if (other.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i) {
        if (other.sides[i].lo < sides[i].lo - slack) return false;
        if (other.sides[i].hi > sides[i].hi + slack) return false;
    }
    return true;
}

Point Box::midpoint() const {
    Point p(dim());
    for (int i = 0; i < dim(); ++i) p[i] = 0.5 * (sides[i].lo + sides[i].hi);
    return p;
}

Box intersect(const Box& a, const Box& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("box dimensions differ");
    std::vector<Interval> s(a.sides.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i].lo = std::max(a.sides[i].lo, b.sides[i].lo);
        s[i].hi = std::max(s[i].lo, std::min(a.sides[i].hi, b.sides[i].hi));
    }
    return Box(std::move(s));
}

double overlap(const Box& a, const Box& b) { return intersect(a, b).volume(); }

MeasurableSet::MeasurableSet(std::vector<Box> boxes) {
    for (auto& b : boxes) {
        if (!boxes_.empty() && b.dim() != boxes_.front().dim())
            throw DimensionMismatch("measurable set mixes box dimensions");
        for (const auto& e : boxes_)
            if (overlap(e, b) > 0.0) throw OverlappingPieces("measurable set boxes overlap");
        boxes_.push_back(std::move(b));
    }
}

MeasurableSet MeasurableSet::single(Box box) { return MeasurableSet(std::vector<Box>{std::move(box)}); }

double MeasurableSet::volume() const {
    double v = 0.0;
    for (const auto& b : boxes_) v += b.volume();
    return v;
}

bool MeasurableSet::contains(const Point& s) const {
    return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) { return b.contains(s); });
}

bool MeasurableSet::empty() const { return volume() <= 0.0; }

MeasurableSet MeasurableSet::intersect(const Box& b) const {
    std::vector<Box> out;
    for (const auto& e : boxes_) {
        Box c = isrm::intersect(e, b);
        if (!c.degenerate()) out.push_back(std::move(c));
    }
    MeasurableSet r;
    r.boxes_ = std::move(out);
    return r;
}

MeasurableSet MeasurableSet::intersect(const MeasurableSet& other) const {
    std::vector<Box> out;
    for (const auto& e : boxes_)
        for (const auto& o : other.boxes_) {
            Box c = isrm::intersect(e, o);
            if (!c.degenerate()) out.push_back(std::move(c));
        }
    MeasurableSet r;
    r.boxes_ = std::move(out);
    return r;
}

MeasurableSet MeasurableSet::disjoint_union(const MeasurableSet& other) const {
    std::vector<Box> all = boxes_;
    all.insert(all.end(), other.boxes_.begin(), other.boxes_.end());
    return MeasurableSet(std::move(all));
}

std::vector<Box> subtract(const Box& box, const std::vector<Box>& holes) {
    const int d = box.dim();
    std::vector<std::vector<double>> cuts(d);
    for (int i = 0; i < d; ++i) {
        std::set<double> c{box.sides[i].lo, box.sides[i].hi};
        for (const auto& h : holes) {
            for (double x : {h.sides[i].lo, h.sides[i].hi})
                if (x > box.sides[i].lo && x < box.sides[i].hi) c.insert(x);
        }
        cuts[i].assign(c.begin(), c.end());
    }
    std::vector<Box> out;
    std::vector<std::size_t> idx(d, 0);
    while (true) {
        std::vector<Interval> s(d);
        for (int i = 0; i < d; ++i) s[i] = {cuts[i][idx[i]], cuts[i][idx[i] + 1]};
        Box cell(std::move(s));
        const Point mid = cell.midpoint();
        bool inside_hole = false;
        for (const auto& h : holes) {
            bool in = true;
            for (int i = 0; i < d; ++i)
                if (mid[i] <= h.sides[i].lo || mid[i] >= h.sides[i].hi) in = false;
            if (in) {
                inside_hole = true;
                break;
            }
        }
        if (!inside_hole && !cell.degenerate()) out.push_back(std::move(cell));
        int axis = 0;
        while (axis < d) {
            if (++idx[axis] + 1 < cuts[axis].size()) break;
            idx[axis] = 0;
            ++axis;
        }
        if (axis == d) break;
    }
    return out;
}

void merge_breakpoints(Breakpoints& into, const Breakpoints& from) {
    if (into.size() < from.size()) into.resize(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
        into[i].insert(into[i].end(), from[i].begin(), from[i].end());
        std::sort(into[i].begin(), into[i].end());
        into[i].erase(std::unique(into[i].begin(), into[i].end()), into[i].end());
    }
}

}  // namespace isrm
