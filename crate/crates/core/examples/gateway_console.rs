//! A broker, the gateway and a console client: publish a few session
//! messages, print the frames the console sees and send a wizard answer.

use std::net::TcpStream;
use std::time::Duration;

use tungstenite::Message;
use tutorbot::gateway::{Gateway, GatewayConfig};
use tutorbot::grammar::GrammarLibrary;
use tutorbot::portnet::{subscribe, Broker, OutPort, SessionClock};
use tutorbot::topics;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let broker = Broker::start("127.0.0.1:0")?;
    let addr = broker.addr().to_string();
    let mut config = GatewayConfig::new(&addr);
    config.bind = "127.0.0.1:0".into();
    let gateway = Gateway::start(&config, GrammarLibrary::builtin())?;
    let commands = subscribe(&addr, topics::OPERATOR_COMMAND)?;

    let stream = TcpStream::connect(gateway.addr())?;
    let (mut ws, _) = tungstenite::client(format!("ws://{}/", gateway.addr()), stream)?;
    ws.get_ref().set_read_timeout(Some(Duration::from_millis(300)))?;
    while gateway.consoles() == 0 {
        std::thread::sleep(Duration::from_millis(5));
    }

    let clock = SessionClock::start();
    let mut grammar = OutPort::open(&addr, topics::DIALOGUE_GRAMMAR, clock)?;
    let mut state = OutPort::open(&addr, topics::DIALOGUE_STATE, clock)?;
    let mut say = OutPort::open(&addr, topics::ROBOT_SAY, clock)?;
    grammar.publish("q1")?;
    state.publish("Question1")?;
    say.publish("In which session did you use the most energy?")?;

    for _ in 0..3 {
        if let Ok(Message::Text(t)) = ws.read() {
            println!("console <- {t}");
        }
    }
    for text in ["pizza", "moved quickly for twenty seconds"] {
        let frame = serde_json::json!({"type": "wizard_utterance", "text": text}).to_string();
        println!("console -> {frame}");
        ws.send(Message::text(frame))?;
    }
    if let Ok(Message::Text(t)) = ws.read() {
        println!("console <- {t}");
    }
    if let Some(m) = commands.next_message(1.0)? {
        println!("{} {}", m.topic, m.payload);
    }
    gateway.shutdown();
    broker.shutdown();
    Ok(())
}
