use std::collections::HashMap;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use sentimix_core::corpus::{self, corpus_stats, read_predictions, write_predictions, Format};
use sentimix_core::ensemble::{read_probabilities, write_probabilities};
use sentimix_core::metrics::f1_report;
use sentimix_core::preprocess::{
    apply_stoplist, build_tf_stoplist, clean_corpus, StopListSource, DEFAULT_TF_STOPLIST_SIZE,
};
use sentimix_core::train::{predict_proba, train_with, EpochRecord};
use sentimix_core::{
    combine, confusion, ArchId, IdSequence, Model64, ModelConfig, ProbMatrix, RawTweet, Sentiment, StopList,
    TokenizedTweet, TrainHyper, Vocabulary,
};

use crate::artifacts::{load_model_dir, write_model_dir, TrainedModel};
use crate::{
    EnsembleArgs, EvaluateArgs, GoldFormat, PredictArgs, PreprocessArgs, ReproduceArgs, StatsArgs, StopListArgs,
    TrainArgs, UsageError,
};

/// Reads a whole input file. A missing file is a usage error.
pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    match fs::read(path) {
        Ok(bytes) => Ok(bytes),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            Err(UsageError(format!("{}: no such file", path.display())).into())
        }
        Err(e) => Err(e).with_context(|| format!("reading {}", path.display())),
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn buffer(f: impl FnOnce(&mut Vec<u8>) -> sentimix_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_corpus(path: &Path, format: Format) -> Result<Vec<RawTweet>> {
    let bytes = read_input(path)?;
    corpus::parse(BufReader::new(bytes.as_slice()), format).with_context(|| path.display().to_string())
}

fn read_labelled(path: &Path, format: Format) -> Result<Vec<RawTweet>> {
    let tweets = read_corpus(path, format)?;
    if tweets.is_empty() {
        bail!("{}: empty corpus", path.display());
    }
    if let Some(t) = tweets.iter().find(|t| t.label.is_none()) {
        bail!("{}: tweet {:?} has no label", path.display(), t.id);
    }
    Ok(tweets)
}

fn read_stoplist(path: &Path) -> Result<StopList> {
    let bytes = read_input(path)?;
    StopList::read(bytes.as_slice(), StopListSource::File).with_context(|| path.display().to_string())
}

fn usage<T>(r: sentimix_core::Result<T>) -> Result<T> {
    r.map_err(|e| UsageError(e.to_string()).into())
}

pub fn stats(args: &StatsArgs) -> Result<()> {
    let tweets = read_corpus(&args.input, args.format.into())?;
    let s = corpus_stats(&tweets).with_context(|| args.input.display().to_string())?;
    println!("sentences\t{}", s.sentence_count);
    println!("avg_char_length\t{:.1}", s.avg_char_length);
    println!("vocabulary\t{}", s.vocab_size);
    println!("words\t{}", s.word_count);
    Ok(())
}

/// Cleaned and stop-listed splits plus the lists that produced them.
struct Prepared {
    english: StopList,
    hindi: StopList,
    splits: Vec<Vec<TokenizedTweet>>,
}

/// Cleans every split with the English list, then removes the high-frequency
/// list, which is built over all splits together unless one is supplied.
fn prepare(lists: &StopListArgs, splits: &[&[RawTweet]]) -> Result<Prepared> {
    let english = match &lists.english_stoplist {
        Some(path) => read_stoplist(path)?,
        None => StopList::bundled_english(),
    };
    let mut cleaned: Vec<Vec<TokenizedTweet>> = splits.iter().map(|s| clean_corpus(s, &english)).collect();
    let hindi = match &lists.hindi_stoplist {
        Some(path) => read_stoplist(path)?,
        None => {
            let all: Vec<&[TokenizedTweet]> = cleaned.iter().map(Vec::as_slice).collect();
            build_tf_stoplist(&all, DEFAULT_TF_STOPLIST_SIZE)?
        }
    };
    for split in &mut cleaned {
        apply_stoplist(split, &hindi);
    }
    info!("stop lists: {} english, {} high-frequency", english.len(), hindi.len());
    Ok(Prepared { english, hindi, splits: cleaned })
}

pub fn preprocess(args: &PreprocessArgs) -> Result<()> {
    let tweets = read_corpus(&args.input, args.format.into())?;
    let prepared = prepare(&args.stoplists, &[&tweets])?;
    let mut out = Vec::new();
    for t in &prepared.splits[0] {
        match t.label {
            Some(label) => writeln!(out, "{}\t{}\t{}", t.id, t.tokens.join(" "), label)?,
            None => writeln!(out, "{}\t{}", t.id, t.tokens.join(" "))?,
        }
    }
    write_output(&args.out, &out)?;
    if let Some(path) = &args.stoplist_out {
        write_output(path, &buffer(|b| prepared.hindi.write(b))?)?;
    }
    Ok(())
}

fn log_epoch(arch: ArchId, epochs: usize) -> impl FnMut(&EpochRecord) {
    move |r| match r.val_f1 {
        Some(f1) => {
            info!("{arch} epoch {}/{epochs}: loss {:.4} accuracy {:.4} val_f1 {:.4}", r.epoch, r.loss, r.accuracy, f1)
        }
        None => info!("{arch} epoch {}/{epochs}: loss {:.4} accuracy {:.4}", r.epoch, r.loss, r.accuracy),
    }
}

/// Builds the vocabulary on `train` and fits one model.
fn fit(
    arch: ArchId,
    config: ModelConfig,
    hyper: &TrainHyper,
    prepared: &Prepared,
    train: &[TokenizedTweet],
    val: &[TokenizedTweet],
) -> Result<TrainedModel> {
    let vocab = Vocabulary::build(train, config.vocab_size)?;
    let train_ids = vocab.encode_corpus(train, config.seq_len)?;
    let val_ids = vocab.encode_corpus(val, config.seq_len)?;
    info!(
        "{arch}: {} training and {} validation tweets, {} vocabulary entries",
        train_ids.len(),
        val_ids.len(),
        vocab.len()
    );
    let model = Model64::build(arch, config, hyper.seed)?;
    let (model, history) = train_with(model, &train_ids, &val_ids, hyper, log_epoch(arch, hyper.epochs))
        .with_context(|| format!("training {arch}"))?;
    Ok(TrainedModel {
        model,
        vocab,
        english: prepared.english.clone(),
        hindi: prepared.hindi.clone(),
        history,
        hyper: *hyper,
    })
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let arch: ArchId = args.arch.into();
    let config = args.hyper.model_config();
    let hyper = args.hyper.train_hyper(args.epochs, args.hyper.seed);
    usage(hyper.validate())?;
    usage(config.validate(arch))?;

    let format = args.format.into();
    let train_raw = read_labelled(&args.input, format)?;
    let val_raw = match &args.validation {
        Some(path) => read_labelled(path, format)?,
        None => Vec::new(),
    };
    let test_raw = match &args.test {
        Some(path) => read_corpus(path, format)?,
        None => Vec::new(),
    };
    let prepared = prepare(&args.stoplists, &[&train_raw, &val_raw, &test_raw])?;
    let trained = fit(arch, config, &hyper, &prepared, &prepared.splits[0], &prepared.splits[1])?;
    write_model_dir(&args.out, &trained)?;
    info!("wrote {}", args.out.display());
    Ok(())
}

fn encode_for(model: &crate::artifacts::LoadedModel, tweets: &[RawTweet]) -> Result<Vec<IdSequence>> {
    let mut cleaned = clean_corpus(tweets, &model.english);
    apply_stoplist(&mut cleaned, &model.hindi);
    Ok(model.vocab.encode_corpus(&cleaned, model.model.config().seq_len)?)
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let loaded = load_model_dir(&args.model)?;
    let tweets = read_corpus(&args.input, args.format.into())?;
    let ids = encode_for(&loaded, &tweets)?;
    let probs = predict_proba(&loaded.model, &ids, loaded.model.arch().name())?;
    let names: Vec<String> = tweets.iter().map(|t| t.id.clone()).collect();
    write_output(&args.out, &buffer(|b| write_probabilities(&names, &probs, b))?)?;
    info!("{} rows written to {}", names.len(), args.out.display());
    Ok(())
}

pub fn ensemble(args: &EnsembleArgs) -> Result<()> {
    let mut ids: Option<Vec<String>> = None;
    let mut matrices = Vec::new();
    for path in &args.input {
        let bytes = read_input(path)?;
        let tag = path.display().to_string();
        let (file_ids, matrix) = read_probabilities(bytes.as_slice(), &tag).with_context(|| tag.clone())?;
        match &ids {
            None => ids = Some(file_ids),
            Some(first) if first.len() != file_ids.len() => {
                bail!("{tag}: {} rows, expected {}", file_ids.len(), first.len())
            }
            Some(first) => {
                if let Some((a, b)) = first.iter().zip(&file_ids).find(|(a, b)| a != b) {
                    bail!("{tag}: id {b:?} where the first file has {a:?}");
                }
            }
        }
        matrices.push(matrix);
    }
    let ids = ids.unwrap_or_default();
    let labels = combine(&matrices)?;
    write_output(&args.out, &buffer(|b| write_predictions(&ids, &labels, b))?)?;
    Ok(())
}

fn read_gold(path: &Path, format: GoldFormat) -> Result<Vec<(String, Sentiment)>> {
    let pairs = match format {
        GoldFormat::Labels => {
            read_predictions(read_input(path)?.as_slice()).with_context(|| path.display().to_string())?
        }
        GoldFormat::Tsv | GoldFormat::Conll => {
            let fmt = if matches!(format, GoldFormat::Tsv) { Format::Tsv } else { Format::Conll };
            read_labelled(path, fmt)?.into_iter().map(|t| (t.id, t.label.expect("checked by read_labelled"))).collect()
        }
    };
    Ok(pairs)
}

/// Pairs every prediction with its gold label; both files must cover the
/// same ids.
fn align(gold: &[(String, Sentiment)], pred: &[(String, Sentiment)]) -> Result<(Vec<Sentiment>, Vec<Sentiment>)> {
    let by_id: HashMap<&str, Sentiment> = gold.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut g = Vec::with_capacity(pred.len());
    let mut p = Vec::with_capacity(pred.len());
    for (id, label) in pred {
        let Some(&gold_label) = by_id.get(id.as_str()) else {
            bail!("id {id:?} is not in the gold file");
        };
        g.push(gold_label);
        p.push(*label);
    }
    if gold.len() != pred.len() {
        let predicted: std::collections::HashSet<&str> = pred.iter().map(|(id, _)| id.as_str()).collect();
        let missing = gold.iter().find(|(id, _)| !predicted.contains(id.as_str())).expect("sizes differ");
        bail!("id {:?} has no prediction", missing.0);
    }
    Ok((g, p))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let gold = read_gold(&args.gold, args.gold_format)?;
    let pred =
        read_predictions(read_input(&args.input)?.as_slice()).with_context(|| args.input.display().to_string())?;
    let (g, p) = align(&gold, &pred)?;
    let report = f1_report(&confusion(&g, &p)?)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.out {
        write_output(path, report.to_delimited().as_bytes())?;
    }
    Ok(())
}

pub fn reproduce(args: &ReproduceArgs) -> Result<()> {
    let config = args.hyper.model_config();
    for arch in ArchId::ALL {
        usage(config.validate(arch))?;
    }
    usage(args.hyper.train_hyper(args.epochs, args.hyper.seed).validate())?;

    let format = args.format.into();
    let train_raw = read_labelled(&args.input, format)?;
    let val_raw = read_labelled(&args.validation, format)?;
    let test_raw = read_labelled(&args.test, format)?;
    let prepared = prepare(&args.stoplists, &[&train_raw, &val_raw, &test_raw])?;

    let trained: Vec<Result<TrainedModel>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ArchId::ALL
            .into_iter()
            .map(|arch| {
                let hyper = args.hyper.train_hyper(args.epochs, args.hyper.seed.wrapping_add(arch.index() as u64));
                let prepared = &prepared;
                scope.spawn(move || fit(arch, config, &hyper, prepared, &prepared.splits[0], &prepared.splits[1]))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });

    let test = &prepared.splits[2];
    let ids: Vec<String> = test.iter().map(|t| t.id.clone()).collect();
    let gold: Vec<Sentiment> = test.iter().map(|t| t.label.expect("labelled")).collect();
    let mut matrices: Vec<ProbMatrix> = Vec::new();
    let mut summary = String::from("model\tweighted_f1\n");
    for (arch, result) in ArchId::ALL.into_iter().zip(trained) {
        let t = result?;
        let dir = args.out.join(arch.name());
        write_model_dir(&dir, &t)?;
        let encoded = t.vocab.encode_corpus(test, config.seq_len)?;
        let probs = predict_proba(&t.model, &encoded, arch.name())?;
        write_output(&dir.join("test_probs.tsv"), &buffer(|b| write_probabilities(&ids, &probs, b))?)?;
        let f1 = f1_report(&confusion(&gold, &probs.argmax())?)?.weighted_f1;
        info!("{arch}: test weighted F1 {f1:.4}");
        summary.push_str(&format!("{arch}\t{f1:.6}\n"));
        matrices.push(probs);
    }

    let labels = combine(&matrices)?;
    write_output(&args.out.join("ensemble_predictions.tsv"), &buffer(|b| write_predictions(&ids, &labels, b))?)?;
    let report = f1_report(&confusion(&gold, &labels)?)?;
    summary.push_str(&format!("ensemble\t{:.6}\n", report.weighted_f1));
    write_output(&args.out.join("metrics.tsv"), report.to_delimited().as_bytes())?;
    write_output(&args.out.join("summary.tsv"), summary.as_bytes())?;
    print!("{}", report.to_table());
    Ok(())
}
