#ifndef DCNET_DCNET_HPP
#define DCNET_DCNET_HPP

#include "dcnet/adam.hpp"
#include "dcnet/checkpoint.hpp"
#include "dcnet/config.hpp"
#include "dcnet/data.hpp"
#include "dcnet/decomposer.hpp"
#include "dcnet/encoder.hpp"
#include "dcnet/error.hpp"
#include "dcnet/gradcheck.hpp"
#include "dcnet/lexicon.hpp"
#include "dcnet/metrics.hpp"
#include "dcnet/model.hpp"
#include "dcnet/ops.hpp"
#include "dcnet/pipeline.hpp"
#include "dcnet/random.hpp"
#include "dcnet/tensor.hpp"
#include "dcnet/trainer.hpp"
#include "dcnet/verification.hpp"
#include "dcnet/weak_labeler.hpp"

#endif  // DCNET_DCNET_HPP
