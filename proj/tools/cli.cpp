#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "leafnet/dataset_index.hpp"
#include "leafnet/image.hpp"
#include "leafnet/metrics.hpp"
#include "leafnet/model.hpp"
#include "leafnet/model_io.hpp"
#include "leafnet/training.hpp"

namespace fs = std::filesystem;

namespace leafnet::cli {

namespace {

/// Architecture flags shared by summary and train.
struct ArchOptions {
    std::string arch = "cnn";
    std::optional<std::size_t> input;
    std::optional<std::vector<std::size_t>> filters;
    std::optional<std::size_t> dense;
    std::optional<std::size_t> classes;
    std::optional<double> conv_dropout;
    std::optional<double> dense_dropout;
    std::optional<std::size_t> timesteps;
    std::optional<std::size_t> features;
    std::optional<std::size_t> hidden;
    std::optional<std::size_t> image_size;

    void attach(CLI::App& app) {
        app.add_option("--arch", arch, "Model architecture")->check(CLI::IsMember({"cnn", "lstm"}));
        app.add_option("--input", input, "CNN input height/width (default 128)");
        app.add_option("--filters", filters, "CNN filters per block, comma separated")->delimiter(',');
        app.add_option("--dense", dense, "Hidden dense width (cnn 1500, lstm 128)");
        app.add_option("--classes", classes, "Number of output classes (default 38)");
        app.add_option("--conv-dropout", conv_dropout, "Dropout after the last pooling block (0.25)");
        app.add_option("--dense-dropout", dense_dropout, "Dropout after the hidden dense layer (0.4)");
        app.add_option("--timesteps", timesteps, "LSTM sequence length (15)");
        app.add_option("--features", features, "LSTM features per step (image pixels / timesteps)");
        app.add_option("--hidden", hidden, "LSTM hidden units (128)");
        app.add_option("--image-size", image_size, "LSTM square image resize (80)");
    }

    ArchConfig resolve() const {
        if (arch == "cnn") {
            for (auto [flag, set] : {std::pair{"--timesteps", timesteps.has_value()},
                                     std::pair{"--features", features.has_value()},
                                     std::pair{"--hidden", hidden.has_value()},
                                     std::pair{"--image-size", image_size.has_value()}}) {
                if (set) {
                    throw ParameterError(std::string(flag) + " applies only to --arch lstm");
                }
            }
            CnnConfig c;
            if (input) {
                c.height = c.width = *input;
            }
            if (filters) {
                c.filters = *filters;
            }
            if (dense) {
                c.dense_units = *dense;
            }
            if (classes) {
                c.classes = *classes;
            }
            if (conv_dropout) {
                c.conv_dropout = *conv_dropout;
            }
            if (dense_dropout) {
                c.dense_dropout = *dense_dropout;
            }
            return c;
        }
        for (auto [flag, set] : {std::pair{"--input", input.has_value()}, std::pair{"--filters", filters.has_value()},
                                 std::pair{"--conv-dropout", conv_dropout.has_value()},
                                 std::pair{"--dense-dropout", dense_dropout.has_value()}}) {
            if (set) {
                throw ParameterError(std::string(flag) + " applies only to --arch cnn");
            }
        }
        LstmConfig c;
        if (timesteps) {
            c.timesteps = *timesteps;
        }
        if (hidden) {
            c.hidden = *hidden;
        }
        if (dense) {
            c.dense_units = *dense;
        }
        if (classes) {
            c.classes = *classes;
        }
        if (image_size) {
            c.image_size = *image_size;
        }
        if (features) {
            c.features = *features;
        } else if (timesteps || image_size) {
            c.features = lstm_input_format(c.image_size, c.timesteps).features;
        }
        return c;
    }
};

std::string describe(const ArchConfig& config) {
    std::ostringstream s;
    if (const auto* c = std::get_if<CnnConfig>(&config)) {
        s << "arch=cnn input=" << c->height << "x" << c->width << "x" << c->channels << " filters=";
        for (std::size_t i = 0; i < c->filters.size(); ++i) {
            s << (i ? "," : "") << c->filters[i];
        }
        s << " dense=" << c->dense_units << " classes=" << c->classes << " dropout=" << c->conv_dropout << "/"
          << c->dense_dropout;
    } else {
        const auto& l = std::get<LstmConfig>(config);
        s << "arch=lstm timesteps=" << l.timesteps << " features=" << l.features << " hidden=" << l.hidden
          << " dense=" << l.dense_units << " classes=" << l.classes << " image=" << l.image_size;
    }
    return s.str();
}

ArchConfig with_classes(ArchConfig config, std::size_t classes) {
    std::visit([&](auto& c) { c.classes = classes; }, config);
    return config;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

int cmd_summary(const ArchOptions& arch, std::ostream& out) {
    const ModelSpec spec = make_spec(arch.resolve());
    out << format_summary(summary(spec));
    return exit_ok;
}

struct TrainOptions {
    std::string data;
    std::string out_dir = ".";
    std::size_t epochs = 10;
    std::size_t batch = 32;
    double lr = 1e-4;
    std::uint64_t seed = default_seed;
    std::size_t workers = 0;
};

int cmd_train(const ArchOptions& arch, const TrainOptions& opt, std::ostream& out) {
    if (opt.epochs == 0 || opt.batch == 0) {
        throw ParameterError("--epochs and --batch must be positive");
    }
    if (!(opt.lr >= 0.0)) {
        throw ParameterError("--lr must be non-negative");
    }
    const ArchConfig requested = arch.resolve();
    const DatasetIndex index = scan_dataset(opt.data);
    if (arch.classes && *arch.classes != index.classes.size()) {
        throw ParameterError("--classes " + std::to_string(*arch.classes) + " disagrees with the " +
                             std::to_string(index.classes.size()) + " classes found in " + opt.data);
    }
    const ModelSpec spec = make_spec(with_classes(requested, index.classes.size()));
    const InputFormat format = input_format(spec);
    FileDataset train_set(index.split_records(Split::train), format);
    FileDataset valid_set(index.split_records(Split::valid), format);
    if (train_set.empty() || valid_set.empty()) {
        throw ParameterError("dataset " + opt.data + " needs images in both train/ and valid/");
    }

    out << "config: " << describe(spec.config) << " epochs=" << opt.epochs << " batch=" << opt.batch
        << " lr=" << opt.lr << " seed=" << opt.seed << '\n';
    out << "dataset: " << train_set.size() << " train / " << valid_set.size() << " valid / "
        << index.classes.size() << " classes\n";
    for (const std::string& w : index.warnings) {
        out << "warning: " << w << '\n';
    }

    SequentialModel model = build_model(spec, opt.seed);
    model.labels = index.classes;
    TrainConfig tc;
    tc.epochs = opt.epochs;
    tc.batch_size = opt.batch;
    tc.lr = opt.lr;
    tc.seed = opt.seed;
    tc.workers = opt.workers;
    const std::vector<EpochRecord> history = train(model, train_set, valid_set, tc, [&](const EpochRecord& r) {
        out << "epoch " << r.epoch << "/" << opt.epochs << " loss=" << fixed(r.train_loss, 4)
            << " acc=" << fixed(r.train_acc, 4) << " val_loss=" << fixed(r.val_loss, 4)
            << " val_acc=" << fixed(r.val_acc, 4) << '\n';
    });

    fs::create_directories(opt.out_dir);
    save_model(model, fs::path(opt.out_dir) / "model.leaf");
    write_file_atomic(fs::path(opt.out_dir) / "history.csv", history_csv(history));
    const EpochRecord& last = history.back();
    out << "final: epoch=" << last.epoch << " train_loss=" << fixed(last.train_loss, 6)
        << " train_acc=" << fixed(last.train_acc, 6) << " val_loss=" << fixed(last.val_loss, 6)
        << " val_acc=" << fixed(last.val_acc, 6) << '\n';
    out << "wrote " << (fs::path(opt.out_dir) / "model.leaf").string() << " and "
        << (fs::path(opt.out_dir) / "history.csv").string() << '\n';
    return exit_ok;
}

struct EvalOptions {
    std::string model;
    std::string data;
    std::string split = "valid";
    std::string out_dir = ".";
};

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
    const SequentialModel model = load_model(opt.model);
    if (model.labels.size() != model.spec.classes) {
        throw StateError("model file carries no label map");
    }
    const DatasetIndex index = scan_dataset(opt.data);
    std::map<std::string, std::size_t> model_ids;
    for (std::size_t k = 0; k < model.labels.size(); ++k) {
        model_ids[model.labels[k]] = k;
    }
    std::vector<std::string> missing;
    for (const std::string& name : index.classes) {
        if (model_ids.count(name) == 0) {
            missing.push_back(name);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const std::string& m : missing) {
            list += (list.empty() ? "" : ", ") + m;
        }
        throw ParameterError("dataset classes unknown to the model: " + list);
    }

    std::vector<DatasetRecord> records = index.split_records(opt.split == "train" ? Split::train : Split::valid);
    if (records.empty()) {
        throw ParameterError("the " + opt.split + " split of " + opt.data + " is empty");
    }
    for (DatasetRecord& r : records) {
        r.label = model_ids.at(index.classes[r.label]);
    }
    const FileDataset data(std::move(records), input_format(model.spec));
    const std::vector<std::size_t> predictions = predict_all(model, data);
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < data.size(); ++i) {
        labels.push_back(data.label(i));
    }
    const ConfusionMatrix cm = confusion_matrix(predictions, labels, model.spec.classes, model.labels);
    const ClassReport report = make_report(cm);

    fs::create_directories(opt.out_dir);
    write_file_atomic(fs::path(opt.out_dir) / "report.txt", format_report(report));
    write_file_atomic(fs::path(opt.out_dir) / "confusion.csv", cm_to_csv(cm));
    out << format_report(report);
    out << "accuracy: " << fixed(report.summary.accuracy, 4) << " (" << cm.trace() << "/" << cm.total() << ")\n";
    return exit_ok;
}

int cmd_predict(const std::string& model_path, const std::string& image_path, std::ostream& out) {
    const SequentialModel model = load_model(model_path);
    const Tensor input = load_image(image_path, input_format(model.spec));
    const Prediction p = predict(model, input);
    out << p.label << '\t' << fixed(p.confidence, 4) << '\n';
    return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"leafnet: CNN and LSTM leaf-disease classifiers"};
    app.require_subcommand(1);

    ArchOptions summary_arch;
    CLI::App* summary_cmd = app.add_subcommand("summary", "Print the layer table and parameter totals");
    summary_arch.attach(*summary_cmd);

    ArchOptions train_arch;
    TrainOptions train_opt;
    CLI::App* train_cmd = app.add_subcommand("train", "Train on a train/ + valid/ dataset tree");
    train_arch.attach(*train_cmd);
    train_cmd->add_option("--data", train_opt.data, "Dataset root")->required();
    train_cmd->add_option("--out", train_opt.out_dir, "Output directory for model.leaf and history.csv");
    train_cmd->add_option("--epochs", train_opt.epochs, "Training epochs (10)");
    train_cmd->add_option("--batch", train_opt.batch, "Minibatch size (32)");
    train_cmd->add_option("--lr", train_opt.lr, "Adam learning rate (0.0001)");
    train_cmd->add_option("--seed", train_opt.seed, "Master random seed");
    train_cmd->add_option("--workers", train_opt.workers, "Worker threads, 0 = all cores");

    EvalOptions eval_opt;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Classification report and confusion matrix");
    eval_cmd->add_option("--model", eval_opt.model, "Model file")->required();
    eval_cmd->add_option("--data", eval_opt.data, "Dataset root")->required();
    eval_cmd->add_option("--split", eval_opt.split, "Split to evaluate")->check(CLI::IsMember({"train", "valid"}));
    eval_cmd->add_option("--out", eval_opt.out_dir, "Output directory for report.txt and confusion.csv");

    std::string predict_model, predict_image;
    CLI::App* predict_cmd = app.add_subcommand("predict", "Classify one image");
    predict_cmd->add_option("--model", predict_model, "Model file")->required();
    predict_cmd->add_option("--image", predict_image, "Image file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*summary_cmd) {
            return cmd_summary(summary_arch, out);
        }
        if (*train_cmd) {
            return cmd_train(train_arch, train_opt, out);
        }
        if (*eval_cmd) {
            return cmd_eval(eval_opt, out);
        }
        return cmd_predict(predict_model, predict_image, out);
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
}

}  // namespace leafnet::cli
