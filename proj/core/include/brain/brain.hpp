#pragma once

#include "brain/config.hpp"
#include "brain/corpus.hpp"
#include "brain/errors.hpp"
#include "brain/eval.hpp"
#include "brain/expansion.hpp"
#include "brain/feedback.hpp"
#include "brain/index.hpp"
#include "brain/ranker.hpp"
#include "brain/segmenter.hpp"
