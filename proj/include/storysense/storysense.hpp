#pragma once
// Umbrella header.

#include "adapters.hpp"
#include "baselines.hpp"
#include "chunker.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "decode.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "kb.hpp"
#include "lm.hpp"
#include "memory.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "supervision.hpp"
#include "tensor.hpp"
#include "text.hpp"
#include "train.hpp"
#include "vocab.hpp"
