use super::{GenError, GenerationRequest};
use crate::scalar::Scalar;
use crate::tensor::{FrameTensor, VideoTensor};

/// Nearest-neighbour resize: output pixel `(y, x)` copies source pixel
/// `(floor(y * H / h), floor(x * W / w))`.
pub fn resize_nearest<T: Scalar>(frame: &FrameTensor<T>, height: usize, width: usize) -> FrameTensor<T> {
    let (sh, sw, c) = frame.shape();
    let src = frame.as_slice();
    let mut data = Vec::with_capacity(height * width * c);
    for y in 0..height {
        let sy = y * sh / height;
        for x in 0..width {
            let sx = x * sw / width;
            let base = (sy * sw + sx) * c;
            data.extend_from_slice(&src[base..base + c]);
        }
    }
    FrameTensor::new(height, width, c, data).expect("resized samples stay in range")
}

/// Deterministic stand-in for a generative backend. Keyframes sit at uniform
/// times over `[0, 1]`; output frame `i` of `F` sits at `i / (F - 1)` and
/// linearly cross-fades the two keyframes around it.
pub fn mock_generate<T: Scalar>(req: &GenerationRequest<T>) -> Result<VideoTensor<T>, GenError> {
    req.validate()?;
    let cfg = &req.config;
    let keys: Vec<FrameTensor<T>> = req.keyframes.iter().map(|k| resize_nearest(k, cfg.height, cfg.width)).collect();
    let r = keys.len();
    let f = cfg.frames;
    let mut frames = Vec::with_capacity(f);
    for i in 0..f {
        if r == 1 {
            frames.push(keys[0].clone());
            continue;
        }
        let t = if f == 1 { 0.0 } else { i as f64 / (f - 1) as f64 };
        let pos = t * (r - 1) as f64;
        let seg = (pos.floor() as usize).min(r - 2);
        let alpha = pos - seg as f64;
        let (a, b) = (keys[seg].as_slice(), keys[seg + 1].as_slice());
        let (wa, wb) = (T::lit(1.0 - alpha), T::lit(alpha));
        let data = a.iter().zip(b).map(|(&x, &y)| wa * x + wb * y).collect();
        frames.push(FrameTensor::from_clamped(cfg.height, cfg.width, keys[0].channels(), data)?);
    }
    Ok(VideoTensor::new(frames, cfg.fps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genclient::{personalize_prompt, GeneratorConfig};

    fn req(keys: Vec<FrameTensor<f64>>, frames: usize) -> GenerationRequest<f64> {
        let cfg = GeneratorConfig { frames, height: 16, width: 20, ..Default::default() };
        GenerationRequest::new(personalize_prompt("scene", "", "").unwrap(), keys, cfg).unwrap()
    }

    #[test]
    fn single_keyframe_is_held() {
        let k = FrameTensor::filled(3, 5, 3, 0.25);
        let v = mock_generate(&req(vec![k.clone()], 4)).unwrap();
        assert_eq!(v.len(), 4);
        let expect = resize_nearest(&k, 16, 20);
        assert!(v.frames().iter().all(|f| *f == expect));
    }

    #[test]
    fn two_keyframes_cross_fade() {
        let v = mock_generate(&req(vec![FrameTensor::filled(2, 2, 3, 0.0), FrameTensor::filled(8, 8, 3, 1.0)], 3)).unwrap();
        let means: Vec<f64> = v.frames().iter().map(|f| f.as_slice()[0]).collect();
        assert_eq!(means, vec![0.0, 0.5, 1.0]);
        assert_eq!(v.frame_shape(), (16, 20, 3));
    }

    #[test]
    fn resize_copies_blocks() {
        let data: Vec<f64> = (0..4).map(|i| i as f64 / 4.0).collect();
        let f = FrameTensor::new(2, 2, 1, data).unwrap();
        let g = resize_nearest(&f, 4, 4);
        assert_eq!(g.get(0, 0, 0), 0.0);
        assert_eq!(g.get(1, 3, 0), 0.25);
        assert_eq!(g.get(3, 0, 0), 0.5);
        assert_eq!(g.get(3, 3, 0), 0.75);
    }
}
