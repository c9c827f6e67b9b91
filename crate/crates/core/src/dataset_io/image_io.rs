use std::path::Path;

use image::{DynamicImage, GrayImage};

use super::IntensityFrame;
use crate::{Error, Result};

fn to_frame(img: DynamicImage, path: &Path) -> Result<IntensityFrame> {
    match img {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            IntensityFrame::new(0.0, w, h, buf.into_raw())
        }
        other => Err(Error::Image {
            path: path.to_path_buf(),
            msg: format!("expected 8-bit grayscale, found {:?}", other.color()),
        }),
    }
}

/// Decode an 8-bit grayscale PNG or PGM from memory. The timestamp is left at 0.
pub fn decode_grayscale(bytes: &[u8], path: &Path) -> Result<IntensityFrame> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    to_frame(img, path)
}

/// Load an 8-bit grayscale PNG or PGM. The timestamp is left at 0.
pub fn load_grayscale_image(path: &Path) -> Result<IntensityFrame> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grayscale(&bytes, path)
}

pub fn write_grayscale_png(frame: &IntensityFrame, path: &Path) -> Result<()> {
    let img = GrayImage::from_raw(frame.width, frame.height, frame.pixels.clone())
        .expect("frame buffer length checked at construction");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{ImageBuffer, Luma, Rgb};

    fn png_bytes<P: image::PixelWithColorType>(img: &ImageBuffer<P, Vec<P::Subpixel>>) -> Vec<u8>
    where
        [P::Subpixel]: image::EncodableLayout,
    {
        let mut out = std::io::Cursor::new(Vec::new());
        img.write_to(&mut out, image::ImageFormat::Png).unwrap();
        out.into_inner()
    }

    #[test]
    fn decodes_binary_pgm() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 7]);
        let f = decode_grayscale(&bytes, Path::new("x.pgm")).unwrap();
        assert_eq!((f.width, f.height), (2, 2));
        assert_eq!(f.pixels, vec![0, 128, 255, 7]);
        assert_eq!(f.get(1, 0), 128);
        assert_eq!(f.get(0, 1), 255);
    }

    #[test]
    fn rejects_sixteen_bit_png() {
        let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_pixel(2, 2, Luma([1000]));
        assert!(decode_grayscale(&png_bytes(&img), Path::new("a.png")).is_err());
    }

    #[test]
    fn rejects_rgb_png() {
        let img: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_pixel(2, 2, Rgb([1, 2, 3]));
        assert!(decode_grayscale(&png_bytes(&img), Path::new("a.png")).is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.png");
        let frame = IntensityFrame::new(0.0, 3, 2, vec![1, 2, 3, 4, 5, 250]).unwrap();
        write_grayscale_png(&frame, &p).unwrap();
        assert_eq!(load_grayscale_image(&p).unwrap(), frame);
    }
}
