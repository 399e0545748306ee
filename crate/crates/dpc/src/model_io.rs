//! On-disk artifacts: model, prototype, and noise-record files. All JSON;
//! floats survive a save/load round trip bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{Autoencoder, Prototype};
use crate::error::{Error, Result};
use crate::mechanism::NoisyCoefficients;
use crate::numerics::DenseNet;

/// A stored network: layer list with widths, activation tags, and row-major
/// weight arrays, plus the autoencoder split point and a reference to the
/// noise record it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub net: DenseNet,
    /// Present for autoencoders: number of layers forming the encoder.
    pub encoder_len: Option<usize>,
    /// Path (or tag) of the noise record attached to the training run.
    pub noise_record: Option<String>,
}

impl ModelFile {
    pub fn for_classifier(net: DenseNet) -> Self {
        ModelFile {
            net,
            encoder_len: None,
            noise_record: None,
        }
    }

    pub fn for_autoencoder(ae: &Autoencoder, noise_record: Option<String>) -> Self {
        ModelFile {
            net: ae.net.clone(),
            encoder_len: Some(ae.encoder_len),
            noise_record,
        }
    }

    pub fn into_autoencoder(self) -> Result<Autoencoder> {
        let encoder_len = self
            .encoder_len
            .ok_or_else(|| Error::parameter("model file is not an autoencoder"))?;
        Ok(Autoencoder {
            net: self.net,
            encoder_len,
        })
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("artifact serializes");
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<()> {
    write_json(model, path)
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    read_json(path)
}

pub fn save_prototypes(prototypes: &[Prototype], path: &Path) -> Result<()> {
    write_json(&prototypes, path)
}

pub fn load_prototypes(path: &Path) -> Result<Vec<Prototype>> {
    read_json(path)
}

pub fn save_noise_record(noisy: &NoisyCoefficients, path: &Path) -> Result<()> {
    write_json(noisy, path)
}

pub fn load_noise_record(path: &Path) -> Result<NoisyCoefficients> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::AutoencoderSpec;
    use crate::data::synth_blobs;
    use crate::mechanism::{aggregate_coefficients, perturb, PrivacyBudget};
    use crate::rng::RngState;

    #[test]
    fn model_file_round_trips_bit_exactly() {
        let spec = AutoencoderSpec::new(vec![5, 2]).unwrap();
        let ae = spec.build(3, &mut RngState::from_seed(3)).unwrap();
        let model = ModelFile::for_autoencoder(&ae, Some("noise.json".into()));

        let path = std::env::temp_dir().join(format!("dpc_model_{}.json", std::process::id()));
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(model, loaded);

        // Serialized form is stable: a second save produces identical bytes.
        let first = std::fs::read(&path).unwrap();
        save_model(&loaded, &path).unwrap();
        let second = std::fs::read(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(first, second);

        let back = loaded.into_autoencoder().unwrap();
        assert_eq!(back.net, ae.net);
        assert_eq!(back.encoder_len, ae.encoder_len);
    }

    #[test]
    fn noise_record_round_trips() {
        let data = synth_blobs(&mut RngState::from_seed(1), 20, 3, 2, 1.0).unwrap();
        let groups = aggregate_coefficients(&data, 4).unwrap();
        let budget = PrivacyBudget::new(0.25, 4).unwrap();
        let noisy = perturb(&groups, &budget, &mut RngState::from_seed(2));

        let path = std::env::temp_dir().join(format!("dpc_noise_{}.json", std::process::id()));
        save_noise_record(&noisy, &path).unwrap();
        let loaded = load_noise_record(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(noisy, loaded);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let path = Path::new("/nonexistent/dpc/model.json");
        assert!(matches!(load_model(path), Err(Error::Io(_))));
    }
}
