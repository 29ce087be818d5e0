#ifndef HMCNN_HMCNN_HPP
#define HMCNN_HMCNN_HPP

#include "hmcnn/bounds.hpp"
#include "hmcnn/conv.hpp"
#include "hmcnn/dataset_io.hpp"
#include "hmcnn/dense.hpp"
#include "hmcnn/embedding.hpp"
#include "hmcnn/hierarchy.hpp"
#include "hmcnn/image.hpp"
#include "hmcnn/rng.hpp"
#include "hmcnn/serialize.hpp"
#include "hmcnn/synth.hpp"
#include "hmcnn/train.hpp"

#endif
