#include <gtest/gtest.h>

#include <sstream>

#include "hmcnn/dataset_io.hpp"
#include "hmcnn/image.hpp"
#include "hmcnn/rng.hpp"

using namespace hmcnn;

TEST(Truncate, Examples)
{
    EXPECT_DOUBLE_EQ(truncate(0.3, 1.0), 0.3);
    EXPECT_DOUBLE_EQ(truncate(5.0, 2.0), 2.0);
    EXPECT_DOUBLE_EQ(truncate(-5.0, 2.0), -2.0);
    EXPECT_THROW(truncate(1.0, 0.0), invalid_input);
}

TEST(Truncate, IdempotentMonotoneOdd)
{
    Rng rng{5};
    for (int k = 0; k < 2000; ++k) {
        const double z = rng.uniform(-10, 10), w = rng.uniform(-10, 10), b = rng.uniform(0.01, 5);
        EXPECT_EQ(truncate(truncate(z, b), b), truncate(z, b));
        EXPECT_EQ(truncate(-z, b), -truncate(z, b));
        if (z <= w) EXPECT_LE(truncate(z, b), truncate(w, b));
    }
}

TEST(Subimage, Placement)
{
    const Grid img{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    EXPECT_EQ(subimage(img, 1, 1, IndexRect::square(2)), (Grid{{1, 2}, {4, 5}}));
    EXPECT_EQ(subimage(img, 2, 2, IndexRect::square(2)), (Grid{{5, 6}, {8, 9}}));
    EXPECT_THROW(subimage(img, 3, 3, IndexRect::square(2)), invalid_input);
    EXPECT_THROW(subimage(img, 0, 1, IndexRect::square(2)), invalid_input);
}

TEST(Subimage, EntriesMatchSource)
{
    Rng rng{9};
    std::vector<double> px(7 * 5);
    for (auto& v : px) v = rng.uniform();
    const Image img{7, 5, px};
    for (int i = 1; i <= 5; ++i)
        for (int j = 1; j <= 3; ++j) {
            const Grid g = subimage(img, i, j, {3, 2});
            ASSERT_EQ(g.size(), 6u);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 2; ++b) EXPECT_EQ(g(a, b), img.at(i - 1 + a, j - 1 + b));
        }
}

TEST(ImageTest, Validation)
{
    EXPECT_THROW((Image{{0.5}}), invalid_input);
    EXPECT_THROW((Image{{0.0, 1.1}, {0.0, 0.0}}), invalid_input);
    EXPECT_NO_THROW((Image{{0.0, 1.0}, {0.0, 0.0}}));
    EXPECT_THROW((LabeledDataset{{Image::zeros(2, 2)}, {2}}), invalid_input);
    EXPECT_THROW((LabeledDataset{{Image::zeros(2, 2), Image::zeros(3, 2)}, {0, 1}}), invalid_input);
}

TEST(DatasetIO, RoundTrip)
{
    Rng rng{1};
    std::vector<Image> imgs;
    for (int k = 0; k < 2; ++k) {
        std::vector<double> px(12);
        for (auto& v : px) v = rng.uniform();
        imgs.emplace_back(3, 4, px);
    }
    const LabeledDataset ds{imgs, {0, 1}};
    std::stringstream ss;
    write_dataset(ss, ds);
    EXPECT_EQ(read_dataset(ss), ds);
}

TEST(DatasetIO, RejectsMalformed)
{
    std::stringstream a{"2,2\n0,0.1,0.2,0.3\n"};
    EXPECT_THROW(read_dataset(a), dataset_format_error);
    std::stringstream b{"2,2\n2,0.1,0.2,0.3,0.4\n"};
    EXPECT_THROW(read_dataset(b), dataset_format_error);
    std::stringstream c{"2,2\n1,0.1,0.2,0.3,1.5\n"};
    EXPECT_THROW(read_dataset(c), dataset_format_error);
    std::stringstream d{"2;2\n"};
    EXPECT_THROW(read_dataset(d), dataset_format_error);
}

TEST(DatasetIO, ClampsTinyExcursions)
{
    std::stringstream s{"2,2\n1,-1e-13,0.5,1.0000000000001,0\n"};
    const auto ds = read_dataset(s);
    EXPECT_EQ(ds.image(0).at(0, 0), 0.0);
    EXPECT_EQ(ds.image(0).at(1, 0), 1.0);
}

TEST(RngTest, DeterministicAndBounded)
{
    Rng a{42}, b{42};
    for (int k = 0; k < 100; ++k) EXPECT_EQ(a(), b());
    Rng c{0};
    for (int k = 0; k < 10000; ++k) {
        const double u = c.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(c.below(7), 7u);
    }
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}
