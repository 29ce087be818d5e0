#ifndef HMCNN_IMAGE_HPP
#define HMCNN_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hmcnn {

/// Raised when an argument violates a documented precondition.
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major 2D array of reals. Index (i,j) is 0-based, i runs over
/// the first image axis (d1 values) and j over the second (d2 values).
class Grid {
public:
    Grid() = default;
    Grid(int rows, int cols, double fill = 0.0) : rows_{rows}, cols_{cols}
    {
        if (rows < 0 || cols < 0) throw invalid_input("Grid: negative extent");
        data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
    }
    Grid(int rows, int cols, std::vector<double> values) : rows_{rows}, cols_{cols}, data_{std::move(values)}
    {
        if (rows < 0 || cols < 0 || data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
            throw invalid_input("Grid: value count does not match extent");
    }
    /// Nested-list constructor, outer index is i.
    Grid(std::initializer_list<std::initializer_list<double>> rows)
    {
        rows_ = static_cast<int>(rows.size());
        cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
        for (const auto& r : rows) {
            if (static_cast<int>(r.size()) != cols_) throw invalid_input("Grid: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double operator()(int i, int j) const noexcept { return data_[index(i, j)]; }
    double& operator()(int i, int j) noexcept { return data_[index(i, j)]; }

    const std::vector<double>& values() const noexcept { return data_; }
    std::vector<double>& values() noexcept { return data_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int i, int j) const noexcept
    {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

/// Grey-value image on {1,…,d1}×{1,…,d2}. Stored 0-based; pixel (i,j) of
/// the 1-based convention is at(i−1, j−1). Pixels are in [0,1], d1,d2 > 1.
class Image {
public:
    Image() = default;

    explicit Image(Grid pixels) : px_{std::move(pixels)} { validate(); }
    Image(int d1, int d2, std::vector<double> values) : px_{d1, d2, std::move(values)} { validate(); }
    Image(std::initializer_list<std::initializer_list<double>> rows) : px_{rows} { validate(); }

    static Image zeros(int d1, int d2) { return Image{Grid{d1, d2, 0.0}}; }

    int d1() const noexcept { return px_.rows(); }
    int d2() const noexcept { return px_.cols(); }

    /// 0-based access.
    double at(int i, int j) const noexcept { return px_(i, j); }
    const Grid& pixels() const noexcept { return px_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    void validate() const
    {
        if (px_.rows() <= 1 || px_.cols() <= 1) throw invalid_input("Image: d1 and d2 must exceed 1");
        for (double v : px_.values())
            if (!(v >= 0.0 && v <= 1.0)) throw invalid_input("Image: pixel outside [0,1]");
    }

    Grid px_;
};

/// Sequence of labelled images, all of equal dimensions, labels in {0,1}.
class LabeledDataset {
public:
    LabeledDataset() = default;
    LabeledDataset(std::vector<Image> images, std::vector<int> labels)
        : images_{std::move(images)}, labels_{std::move(labels)}
    {
        if (images_.size() != labels_.size()) throw invalid_input("LabeledDataset: length mismatch");
        if (images_.empty()) throw invalid_input("LabeledDataset: empty");
        for (std::size_t k = 0; k < images_.size(); ++k) {
            if (labels_[k] != 0 && labels_[k] != 1)
                throw invalid_input("LabeledDataset: label at index " + std::to_string(k) + " is not binary");
            if (images_[k].d1() != images_[0].d1() || images_[k].d2() != images_[0].d2())
                throw invalid_input("LabeledDataset: image " + std::to_string(k) + " has different dimensions");
        }
    }

    std::size_t size() const noexcept { return images_.size(); }
    int d1() const noexcept { return images_.empty() ? 0 : images_[0].d1(); }
    int d2() const noexcept { return images_.empty() ? 0 : images_[0].d2(); }

    const Image& image(std::size_t k) const { return images_.at(k); }
    int label(std::size_t k) const { return labels_.at(k); }
    const std::vector<Image>& images() const noexcept { return images_; }
    const std::vector<int>& labels() const noexcept { return labels_; }

    /// Half-open index range [first,last) as a new dataset.
    LabeledDataset slice(std::size_t first, std::size_t last) const
    {
        if (first >= last || last > size()) throw invalid_input("LabeledDataset::slice: bad range");
        return LabeledDataset{std::vector<Image>(images_.begin() + static_cast<std::ptrdiff_t>(first),
                                                 images_.begin() + static_cast<std::ptrdiff_t>(last)),
                              std::vector<int>(labels_.begin() + static_cast<std::ptrdiff_t>(first),
                                               labels_.begin() + static_cast<std::ptrdiff_t>(last))};
    }

    double label_frequency() const noexcept
    {
        double ones = 0;
        for (int y : labels_) ones += y;
        return labels_.empty() ? 0.0 : ones / static_cast<double>(labels_.size());
    }

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

private:
    std::vector<Image> images_;
    std::vector<int> labels_;
};

/// T_β z = max{−β, min{β, z}}.
inline double truncate(double z, double beta)
{
    if (!(beta > 0.0)) throw invalid_input("truncate: beta must be positive");
    return std::max(-beta, std::min(beta, z));
}

/// Rectangular index set {0,…,rows−1}×{0,…,cols−1}.
struct IndexRect {
    int rows = 0;
    int cols = 0;

    static constexpr IndexRect square(int side) noexcept { return {side, side}; }
    std::size_t count() const noexcept { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

/// x_{(i,j)+I} for a 1-based offset (i,j): the block whose top-left pixel is
/// the 1-based pixel (i,j). Requires (i,j)+I ⊆ {1,…,d1}×{1,…,d2}.
inline Grid subimage(const Grid& img, int i, int j, IndexRect index_set)
{
    if (index_set.rows <= 0 || index_set.cols <= 0) throw invalid_input("subimage: empty index set");
    if (i < 1 || j < 1 || i + index_set.rows - 1 > img.rows() || j + index_set.cols - 1 > img.cols())
        throw invalid_input("subimage: offset (" + std::to_string(i) + "," + std::to_string(j) +
                            ") places the index set outside the image");
    Grid out{index_set.rows, index_set.cols};
    for (int a = 0; a < index_set.rows; ++a)
        for (int b = 0; b < index_set.cols; ++b) out(a, b) = img(i - 1 + a, j - 1 + b);
    return out;
}

inline Grid subimage(const Image& img, int i, int j, IndexRect index_set)
{
    return subimage(img.pixels(), i, j, index_set);
}

} // namespace hmcnn

#endif
